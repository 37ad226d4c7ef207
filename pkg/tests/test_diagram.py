import math
from fractions import Fraction

import numpy as np
import pytest

from radonlike.diagram import (InHull, Outside, VerdictConfig, Witness, hull_membership,
                               main_order, n0_points, ratio_floor, scaling_point_exact,
                               stability_margin, verdict, verify_certificate, witness_check,
                               witness_ratio)
from radonlike.errors import NonOrthonormalBases, NotNondegenerate, TraceViolation
from radonlike.qcalc import BasisTriple, TrilinearForm

SMALL = VerdictConfig(n_samples=16, descent_starts=2, descent_evals=200)


def test_scaling_point():
    # k = 1, d = 2: order 2/3 of the way to one full slot
    assert main_order(1, 2) == Fraction(2, 3)
    assert scaling_point_exact(1, 1, 2, Fraction(2, 3)) == [Fraction(2, 3), Fraction(2, 3),
                                                            Fraction(1, 3), Fraction(1, 3)]


def test_n0_aligned_degenerate(degenerate_form):
    samp = n0_points(degenerate_form, BasisTriple.standard(1, 1, 2))
    pts = {tuple(tuple(int(x) for x in part) for part in p) for p in samp.points}
    assert pts == {((0,), (0,), (0, 0)), ((1,), (1,), (1, 0))}


def test_n0_rejects_non_orthonormal(degenerate_form):
    with pytest.raises(NonOrthonormalBases):
        n0_points(degenerate_form, BasisTriple(np.eye(1), np.eye(1), 2 * np.eye(2)))


def test_hull_membership_both_outcomes():
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    res = hull_membership(P, np.array([0.25, 0.25]))
    assert isinstance(res, InHull)
    np.testing.assert_allclose(res.weights @ P, [0.25, 0.25], atol=1e-12)
    out = hull_membership(P, np.array([0.8, 0.8]))
    assert isinstance(out, Outside)
    # separating functional: x . q > max over P
    assert out.x @ np.array([0.8, 0.8]) > np.max(P @ out.x)


def test_hull_exact_weights():
    P = np.eye(3)
    q = [Fraction(1, 3)] * 3
    res = hull_membership(P, np.array([1 / 3] * 3), query_exact=q)
    assert isinstance(res, InHull)
    assert res.exact_weights == [Fraction(1, 3)] * 3


def test_witness_trace_check():
    w = Witness(BasisTriple.standard(1, 1, 2), np.array([1.0, 0.0, -1.0, 1.0]))
    w.check_traces()
    with pytest.raises(TraceViolation):
        Witness(BasisTriple.standard(1, 1, 2), np.array([1.0, 0.0, 1.0, 1.0])).check_traces()


def test_witness_ratio_closed_form(degenerate_form):
    # the only surviving term decays like exp(-2 tau / 3)
    w = Witness(BasisTriple.standard(1, 1, 2), np.array([1.0, 0.0, -1.0, 1.0]))
    for tau in (0.0, 1.5, 4.0):
        assert witness_ratio(degenerate_form, w, tau) == pytest.approx(
            math.sqrt(2) * math.exp(-2 * tau / 3), rel=1e-9)
    rep = witness_check(degenerate_form, w)
    assert rep.accepted and rep.slope == pytest.approx(-2 / 3, abs=1e-6)


def test_verdict_degenerate(degenerate_form):
    v = verdict(degenerate_form, SMALL)
    assert v.status == "Degenerate"
    a, b, c = v.witness.blocks
    assert a.sum() > 0 and abs(b.sum()) < 1e-9 and abs(c.sum()) < 1e-9
    assert v.decay.slope == pytest.approx(-2 / 3, abs=0.02)


def test_verdict_rotated_degenerate(rng):
    # a rank-one slice form is degenerate whatever the w-frame
    Q = TrilinearForm(np.array([[[0.3, -0.8]]]))
    assert verdict(Q, SMALL).status == "Degenerate"


def test_verdict_nondegenerate(rotational_form):
    v = verdict(rotational_form, SMALL)
    assert v.status == "Nondegenerate"
    assert v.certificate
    for ens in v.certificate:
        assert verify_certificate(rotational_form, ens)
        assert sum(w for w, _, _ in ens["entries"]) == 1


def test_verdict_random_forms_nondegenerate(rng):
    for dims in [(2, 1, 2), (2, 2, 2)]:
        Q = TrilinearForm(rng.standard_normal(dims))
        assert verdict(Q, SMALL).status == "Nondegenerate"


def test_zero_form_degenerate():
    assert verdict(TrilinearForm.zeros(2, 1, 2), SMALL).status == "Degenerate"


def test_verdict_seed_reproducible(rotational_form):
    a = verdict(rotational_form, SMALL)
    b = verdict(rotational_form, VerdictConfig(**{**SMALL.__dict__, "threads": 4}))
    assert a.search_stats == b.search_stats


def test_ratio_floor_rotational(rotational_form):
    assert ratio_floor(rotational_form, n_samples=16) == pytest.approx(math.sqrt(3), rel=1e-3)


def test_stability_requires_nondegenerate(degenerate_form):
    with pytest.raises(NotNondegenerate):
        stability_margin(degenerate_form, 0.1, n_samples=8)


@pytest.mark.slow
def test_stability_margin_positive(rotational_form):
    rep = stability_margin(rotational_form, 0.1, n_perturbations=4, n_samples=12)
    assert rep.margin > 0 and 0.1 < rep.max_radius < rotational_form.norm
