from fractions import Fraction

import numpy as np
import pytest

from radonlike.errors import BadDimensions, ParseError, RankDeficient
from radonlike.radonmap import (BasePoint, best_exponents, coarea_identity_check, emit_text,
                                extract_q, from_json, graph_substitution, hormander_check,
                                model_map, parse_text, random_polymap, to_json)

from conftest import corpus_map


def test_parse_and_emit_round_trip():
    text = "# n=3 d1=2\nx3 + 1/2*x1^2*t1 - 0.25*x2*t2^3\n"
    phi = parse_text(text)
    assert phi.n == 3 and phi.d1 == 2 and phi.k == 1
    again = parse_text(emit_text(phi), n=3, d1=2)
    assert again == phi
    assert from_json(to_json(phi)) == phi
    assert emit_text(parse_text(emit_text(phi), n=3, d1=2)) == emit_text(phi)


def test_random_round_trips(rng):
    for _ in range(20):
        phi = random_polymap(rng, 4, 2, 2, 3)
        assert parse_text(emit_text(phi), n=4, d1=2) == phi
        assert from_json(to_json(phi)) == phi


def test_exact_coefficients_survive():
    phi = parse_text("x2 + 2/3*x1*t1", n=3, d1=1)
    c = phi.components[0].terms[(1, 0, 0, 1)]
    assert c == Fraction(2, 3)


@pytest.mark.parametrize("bad", ["x1 +", "x4*t1", "2*3*x1", "x1**2"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_text(bad, n=3, d1=1)


def test_point_parse():
    phi = corpus_map("degenerate")
    p = BasePoint.parse("1,2,3;0.5", phi)
    assert p.x == (1.0, 2.0, 3.0) and p.t == (0.5,)
    with pytest.raises(ParseError):
        BasePoint.parse("1,2;0", phi)


def test_extract_degenerate_example():
    phi = corpus_map("degenerate")
    Q, Z = extract_q(phi, BasePoint.origin(phi))
    np.testing.assert_allclose(Q.coeffs, [[[1.0, 0.0]]])
    np.testing.assert_allclose(Z, [[1, 0, 0], [0, 0, 1]])


def test_extract_rotational_example():
    phi = corpus_map("rotational")
    Q, Z = extract_q(phi, BasePoint.origin(phi))
    np.testing.assert_allclose(Q.coeffs[:, 0, :], np.eye(2))


def test_zero_map_rank_deficient():
    phi = corpus_map("zero")
    with pytest.raises(RankDeficient):
        extract_q(phi, BasePoint.origin(phi))


def test_exponents():
    # rotational curvature, n = 3, k = 1, d1 = 2: (n+1)/n and n+1
    ex = best_exponents(3, 1, 2)
    assert (ex.p_b, ex.q_b) == (Fraction(4, 3), 4)
    ex = best_exponents(3, 1, 1)
    assert (ex.p_b, ex.q_b, ex.p_dual, ex.q_dual) == (Fraction(5, 3), 5, Fraction(5, 2), Fraction(5, 4))
    with pytest.raises(BadDimensions):
        best_exponents(2, 2, 1)


def test_graph_substitution_vanishes(rng):
    phi = random_polymap(rng, 3, 1, 2, 3)
    assert all(p.is_zero() for p in graph_substitution(phi))


def test_coarea_identity(rng):
    phi = random_polymap(rng, 4, 2, 2, 3)
    pts = [(rng.standard_normal(4), rng.standard_normal(2)) for _ in range(10)]
    assert coarea_identity_check(phi, pts) < 1e-9


def test_hormander():
    phi = corpus_map("degenerate")
    assert hormander_check(phi, BasePoint.origin(phi)) == (4, True)
    phi = parse_text("x3", n=3, d1=1)
    assert hormander_check(phi, BasePoint.origin(phi)) == (3, False)


def test_model_map_normalizes(rng):
    phi = parse_text("3*x2 + x1*t1", n=2, d1=1)
    m = model_map(phi, BasePoint.origin(phi))
    assert m.M[0, 0] == pytest.approx(3.0)
    assert m.theta[0, 0, 0] == pytest.approx(1 / 3)
