import math

import numpy as np
import pytest

from radonlike.diagram import Witness
from radonlike.errors import InsufficientSamples, NonUnitDeterminant, TraceViolation
from radonlike.harness import (EtaSpec, adaptive_cubature, ball_samples, ball_volume,
                               chord_constant, ellipsoid_image_volume,
                               ellipsoid_image_volume_gram, fit_log_slope, incidence_ratio,
                               knapp_family, knapp_sweep, least_separated_witness,
                               sublevel_filter, witness_stretch)
from radonlike import harness
from radonlike.qcalc import BasisTriple
from radonlike.radonmap import BasePoint, model_map

from conftest import corpus_map

DEG_WITNESS = Witness(BasisTriple.standard(1, 1, 2), np.array([1.0, 0.0, -1.0, 1.0]))


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
    x = ball_samples(np.random.default_rng(0), 1000, 3)
    assert np.all(np.linalg.norm(x, axis=1) <= 1)


def test_image_volume_minors_match_gram(rng):
    for _ in range(20):
        L = rng.standard_normal((2, 4))
        om = rng.standard_normal((4, 4))
        assert ellipsoid_image_volume(L, om) == pytest.approx(
            ellipsoid_image_volume_gram(L, om), rel=1e-10)


def test_sublevel_chord_oracle():
    E = np.eye(2)
    vals = [sublevel_filter(lambda T: T[:, 0], E, 0.5, 100_000, seed=s).c for s in (0, 1)]
    for c in vals:
        assert c == pytest.approx(chord_constant(0.5), abs=0.01)


def test_sublevel_product_stable_across_seeds():
    cs = [sublevel_filter(lambda T: T[:, 0] * T[:, 1], np.eye(2), 0.1, 100_000, seed=s).c
          for s in (0, 1, 2)]
    assert max(cs) / min(cs) < 1.02


def test_sublevel_zero_keeps_everything():
    f = sublevel_filter(lambda T: np.zeros(len(T)), np.eye(2), 0.5, 1000)
    assert f.c == 0.0 and f.retained_fraction == 1.0


def test_knapp_family_degenerate_volumes(degenerate_form):
    fam = knapp_family(degenerate_form, DEG_WITNESS, 1.0)
    assert fam.vol_E == pytest.approx(2 * math.e)
    assert abs(np.linalg.det(fam.omega)) == pytest.approx(1.0)


def test_knapp_family_rejects_traces(degenerate_form):
    bad = Witness(BasisTriple.standard(1, 1, 2), np.array([1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(TraceViolation):
        knapp_family(degenerate_form, bad, 1.0)


def test_trivial_family_closed_form(rotational_form):
    # tau = 0: numerator |F||B'| and |G| = |B'| * |slice|, slices all of the same volume
    w = Witness(BasisTriple.standard(2, 1, 2), np.array([0.5, 0.5, 0.0, 0.0, 0.0]))
    fam = knapp_family(rotational_form, w, 0.0)
    est = incidence_ratio(fam, "montecarlo", 100_000, seed=3)
    ref = incidence_ratio(fam, "grid", 40_000)
    assert est.ratio == pytest.approx(ref.ratio, rel=0.05)


def test_mc_and_grid_agree(degenerate_form):
    for tau in (0.0, 1.0, 2.0):
        fam = knapp_family(degenerate_form, DEG_WITNESS, tau)
        mc = incidence_ratio(fam, "montecarlo", 100_000, seed=5)
        gr = incidence_ratio(fam, "grid", 100_000)
        assert abs(mc.ratio - gr.ratio) <= 3 * mc.stderr + 0.01 * gr.ratio


def test_insufficient_samples(degenerate_form):
    fam = knapp_family(degenerate_form, DEG_WITNESS, 0.0)
    with pytest.raises(InsufficientSamples):
        incidence_ratio(fam, "montecarlo", 50, seed=0, max_rel_se=1e-4)


def test_degenerate_sweep_slope(degenerate_form):
    s = knapp_sweep(degenerate_form, DEG_WITNESS, range(7), 20_000)
    assert s.slope == pytest.approx(0.4, abs=0.1)


def test_least_separated_witness(rotational_form):
    w = least_separated_witness(rotational_form)
    np.testing.assert_allclose(w.x, [0.5, 0.5, 0.0, 0.0, 0.0], atol=1e-9)


def test_fit_log_slope_exact():
    t = np.arange(5.0)
    s, hw = fit_log_slope(t, np.exp(0.3 * t + 1))
    assert s == pytest.approx(0.3) and hw == pytest.approx(0.0, abs=1e-9)


def test_adaptive_cubature_gaussian():
    q = adaptive_cubature(lambda X: np.exp(-np.sum(X ** 2, axis=1)), [-3, -3], [3, 3], rtol=1e-10)
    assert q.value == pytest.approx(math.pi * math.erf(3) ** 2, rel=1e-9)


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_testing_baseline_closed_form(a):
    # integrand (1 + |t|^2)^(-3/2) over the box [-a, a]^2
    phi = corpus_map("rotational")
    tv = harness.testing_integral(phi, EtaSpec("box", a), np.zeros(3), np.eye(3))
    assert tv.value == pytest.approx(4 * math.atan(a * a / math.sqrt(1 + 2 * a * a)), rel=1e-6)
    assert tv.value <= (2 * a) ** 2


def test_testing_zero_cutoff_and_unit_det():
    phi = corpus_map("rotational")
    assert harness.testing_integral(phi, EtaSpec("zero"), np.zeros(3), np.eye(3)).value == 0.0
    with pytest.raises(NonUnitDeterminant):
        harness.testing_integral(phi, EtaSpec(), np.zeros(3), 2 * np.eye(3))


def test_testing_degenerate_witness_growth():
    phi = corpus_map("degenerate")
    model = model_map(phi, BasePoint.origin(phi))
    sw = harness.testing_sweep(phi, EtaSpec("box", 1.0), range(0, 5),
                       family=lambda t: witness_stretch(model, DEG_WITNESS, t))
    assert sw.monotone and sw.slope > 0 and sw.trend == "Unbounded-trend"
