import numpy as np
import pytest

from radonlike.errors import EmptyGuard, RankDeficient, ZeroMeasure
from radonlike.poly import Poly, RationalFunction
from radonlike.vfields import (box_probes, build, chebyshev_subset, component_count,
                               determinant_identity_exact, gen1_fields, kronecker_exact,
                               select_minor, start, iterate_generation, verify_identities)

from conftest import corpus_map


def corpus_funcs(name):
    return list(corpus_map(name).components)


@pytest.fixture(scope="module")
def paraboloid_state():
    return build(corpus_funcs("paraboloid"), box_probes(2, 400, seed=1), N=2)


def test_paraboloid_first_generation_closed_form(paraboloid_state):
    # the leading pair (x1, x2) has unit Jacobian, so the fields are e_i / 2
    g = paraboloid_state.generations[0]
    assert g.minor == (0, 1)
    pts = np.array([[0.1, 0.3], [0.4, 0.2]])
    np.testing.assert_allclose(g.matrix_at(pts), np.broadcast_to(0.5 * np.eye(2), (2, 2, 2)))
    X1f3 = g.apply(0, paraboloid_state.families[0][2].func)
    np.testing.assert_allclose(X1f3.eval_many(pts), pts[:, 0])


@pytest.mark.parametrize("name", ["paraboloid", "skewed"])
def test_identities_exact(name):
    st = build(corpus_funcs(name), box_probes(2, 300, seed=2), N=2)
    for N in (1, 2):
        g = st.generations[N - 1]
        assert kronecker_exact(g) and determinant_identity_exact(g)
        rep = verify_identities(st, N)
        assert rep.passed, rep
        assert rep.sup_abs <= 1 + 1e-9


@pytest.mark.parametrize("N", [1, 2, 3])
def test_component_counts(N):
    st = build(corpus_funcs("paraboloid"), box_probes(2, 200, seed=3), N=N)
    assert [len(f) for f in st.families] == [component_count(3, 2, g) for g in range(N + 1)]


def test_count_formula():
    assert component_count(3, 2, 2) == 27


def test_select_minor_rank_deficient():
    one = RationalFunction(Poly.const(2, 1))
    with pytest.raises(RankDeficient):
        select_minor([one, one], box_probes(2, 20))


def test_gen1_vanishing_minor():
    x1 = RationalFunction(Poly.var(2, 0))
    with pytest.raises(RankDeficient):
        gen1_fields([x1, x1], (0, 1))


def test_empty_guard():
    st = start(corpus_funcs("paraboloid"), np.empty((0, 2)))
    with pytest.raises(EmptyGuard):
        iterate_generation(st)


def test_chebyshev_subset():
    W = np.ones(100)
    jac = np.linspace(0.0, 1.0, 100)
    sub = chebyshev_subset(W, jac)
    # threshold is twice the mean, so every cell survives
    assert sub.threshold == pytest.approx(1.0)
    assert sub.ratio >= 0.5
    jac2 = np.r_[np.zeros(99), 100.0]
    assert chebyshev_subset(W, jac2).ratio == pytest.approx(0.99)
    with pytest.raises(ZeroMeasure):
        chebyshev_subset(np.zeros(3), np.ones(3))


def test_generation_cap():
    with pytest.raises(ValueError):
        build(corpus_funcs("paraboloid"), box_probes(2, 10), N=4)
