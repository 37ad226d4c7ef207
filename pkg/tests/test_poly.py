from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radonlike.errors import PoleError
from radonlike.poly import Poly, RationalFunction, det

x, y = Poly.var(2, 0), Poly.var(2, 1)

small_ints = st.integers(min_value=-4, max_value=4)
polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), small_ints,
                        max_size=5).map(lambda t: Poly(2, t))


def test_arithmetic_and_exact_eval():
    p = (x + 1) * (x - 1) - x ** 2
    assert p == Poly.const(2, -1)
    q = Fraction(1, 3) * x * y + 2
    assert q((Fraction(3), Fraction(2))) == 4
    assert isinstance(q((Fraction(1), Fraction(1))), Fraction)
    assert q((0.5, 1.0)) == pytest.approx(2 + 1 / 6)


def test_zero_and_degree():
    assert (x - x).is_zero()
    assert (x ** 3 * y + y).degree() == 4
    assert Poly.zero(2).degree() == 0


@settings(max_examples=40, deadline=None)
@given(polys, polys)
def test_product_rule(p, q):
    assert (p * q).diff(0) == p.diff(0) * q + p * q.diff(0)


def test_eval_many_matches_scalar():
    p = 3 * x ** 2 * y - y ** 3 + Fraction(1, 2)
    pts = np.random.default_rng(0).standard_normal((20, 2))
    np.testing.assert_allclose(p.eval_many(pts), [p(tuple(r)) for r in pts], rtol=1e-13)


def test_compose():
    p = x * y
    r = p.compose([x + y, x - y])
    assert r == x ** 2 - y ** 2


def test_rational_inverse_product_is_one():
    p = x ** 2 + y + 3
    q = x * y - 7
    r = RationalFunction(p, q) * RationalFunction(q, p)
    assert r.equals(1)
    assert r((Fraction(2), Fraction(5))) == 1


def test_rational_diff_quotient_rule():
    f = RationalFunction(x, y + 2)
    g = f.diff(1)
    assert g.equals(RationalFunction(-x, (y + 2) ** 2))


def test_pole_rejected():
    f = RationalFunction(x, y)
    with pytest.raises(PoleError):
        f((1.0, 0.0))
    with pytest.raises(PoleError):
        f.eval_many(np.array([[1.0, 1e-15]]))


def test_cancel_reduces():
    f = RationalFunction(x ** 2 - y ** 2, x - y).cancel()
    assert f.den.degree() == 0
    assert f.num == x + y


def test_det_matches_numpy():
    M = [[x, y], [y, x + 1]]
    d = det(M)
    assert d == x * x + x - y * y
    A = np.random.default_rng(1).standard_normal((4, 4))
    assert det(A.tolist()) == pytest.approx(np.linalg.det(A))
