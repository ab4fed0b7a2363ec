import math
import warnings

import numpy as np
import pytest

from geoinfer import Cloud, check_critical_stability, check_delta_inclusion, delta_L_measure, holder_experiment, l1_projection_distance, sample_mu_medial
from geoinfer.stability import jitter, lemma_mu, mu_resolution, net_resolution, stability_report, witness_strata

TWO = Cloud([[-1.0, 0.0], [1.0, 0.0]])
E2 = ([-3.0, -3.0], [3.0, 3.0])


def test_l1_identical_is_zero():
    K = Cloud(np.random.default_rng(0).random((10, 2)))
    assert l1_projection_distance(K, K, E2, 5000, 0).value == 0.0


def test_l1_translated_point_closed_form():
    eps = 0.01
    est = l1_projection_distance(Cloud([[0.0]]), Cloud([[eps]]), ([-1.0], [1.0]), 1000, 0)
    assert est.value == pytest.approx(2 * eps, rel=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-15)


def test_l1_translated_cloud_bounded_by_translation():
    rng = np.random.default_rng(1)
    P = rng.random((15, 2))
    t = np.array([1e-3, -2e-3])
    est = l1_projection_distance(Cloud(P), Cloud(P + t), ([-0.5, -0.5], [1.5, 1.5]), 20_000, 2)
    vol = 4.0
    assert est.value >= vol * np.linalg.norm(t) * (1 - 1e-9) - 3 * est.stderr
    # except near medial axes every projection moves by exactly |t|
    assert est.value <= vol * 3 * np.linalg.norm(t) + 3 * est.stderr


def test_l1_symmetric_exactly():
    rng = np.random.default_rng(2)
    K, K2 = Cloud(rng.random((12, 2))), Cloud(rng.random((9, 2)))
    assert l1_projection_distance(K, K2, E2, 10_000, 4) == l1_projection_distance(K2, K, E2, 10_000, 4)


def test_tie_warning():
    K = Cloud([[0.0], [2.0]])
    # a box a few tie slacks wide around the medial point 1.0
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        l1_projection_distance(K, K, ([1.0 - 1e-8], [1.0 + 1e-8]), 200, 0)
    assert any("ties" in str(x.message) for x in w)


def test_delta_L_examples():
    assert delta_L_measure(TWO, TWO, 0.5, E2, 5000, 0).measure.value == 0.0
    K2 = Cloud([[-1.0, 0.0], [1.0, 0.1]])
    res = delta_L_measure(TWO, K2, 0.5, E2, 50_000, 1)
    assert res.measure.value > 0
    assert np.all(np.linalg.norm(res.pK - res.pK2, axis=1) >= 0.5)
    # the witnesses sit between the two bisectors
    assert np.all(np.abs(res.X[:, 0]) <= 0.1 * 3 + 1e-9)
    assert delta_L_measure(TWO, K2, 10.0, E2, 5000, 1).measure.value == 0.0


def test_delta_L_nonincreasing_in_L():
    K = Cloud(np.random.default_rng(3).random((10, 2)))
    K2 = jitter(K, 0.02, 5)
    vals = [delta_L_measure(K, K2, L, E2, 40_000, 6).measure.value for L in (0.05, 0.1, 0.2, 0.4)]
    assert vals == sorted(vals, reverse=True)


def test_delta_L_requires_L_above_twice_hausdorff():
    with pytest.raises(ValueError):
        delta_L_measure(TWO, jitter(TWO, 0.1, 0), 0.1, E2, 100, 0)


def test_lemma_mu_values():
    assert lemma_mu(0.5, 2.0, 1e-3) > 1
    assert lemma_mu(1.5, 1.2, 1e-4) < 1


def test_inclusion_identical_sets_vacuous():
    rep = check_delta_inclusion(TWO, TWO, 0.5, 2.0, np.empty((0, 2)), n_rays=2000)
    assert rep.violations == 0 and rep.n_checked == 0


def test_inclusion_density_sweep_nonincreasing():
    K2 = jitter(TWO, 1e-3, 7)
    dl = delta_L_measure(TWO, K2, 0.5, ([-0.2, -2.0], [0.2, 2.0]), 200_000, 8)
    rep = check_delta_inclusion(TWO, K2, 0.5, 2.0, dl, n_rays=40_000, budgets=[2500, 5000, 10_000, 20_000], seed=9)
    counts = [v for _, v in rep.sweep]
    assert counts == sorted(counts, reverse=True)
    assert rep.violations == 0 and rep.n_checked > 0
    assert not rep.conclusive


def test_critical_identical_sets():
    S = sample_mu_medial(TWO, 0.6, 0.05, 20_000, 0, margin=1.0)
    rep = check_critical_stability(TWO, TWO, S, n_rays=20_000, seed=1)
    assert rep.violations == 0 and rep.epsilon == 0


def test_critical_jittered_two_point():
    S = sample_mu_medial(TWO, 0.6, 0.05, 20_000, 0, margin=1.0)
    K2 = jitter(TWO, 1e-3, 3)
    rep = check_critical_stability(TWO, K2, S, n_rays=80_000, budgets=[10_000, 20_000, 40_000], seed=1)
    fails = [v for _, v in rep.sweep]
    assert fails == sorted(fails, reverse=True)
    assert rep.violations == 0
    assert rep.epsilon == pytest.approx(1e-3)


def test_holder_single_point_linear():
    curve = holder_experiment(Cloud([[0.0, 0.0]]), ([-1, -1], [1, 1]), [0.1, 0.01, 0.001], trials=2, seed=0, n=5000)
    assert curve.h_emp == pytest.approx(1.0, abs=1e-9)
    assert curve.bound_holds and curve.monotone


def test_holder_zero_delta():
    curve = holder_experiment(TWO, E2, [0.01, 0.0], trials=2, seed=0, n=5000)
    assert curve.l1[-1] == 0.0


def test_holder_two_point_exponent():
    curve = holder_experiment(TWO, ([-2, -2], [2, 2]), np.geomspace(0.1, 1e-3, 4), trials=3, seed=1, n=50_000)
    assert curve.h_ref == pytest.approx(1 / 6)
    assert curve.h_emp >= curve.h_ref
    assert curve.bound_holds


def test_holder_rejects_increasing_deltas():
    with pytest.raises(ValueError):
        holder_experiment(TWO, E2, [0.01, 0.1], trials=1, seed=0, n=100)


def test_l1_converges_for_densifying_samples():
    # samples of a circle converge in Hausdorff distance to a dense reference
    t_ref = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    ref = Cloud(np.c_[np.cos(t_ref), np.sin(t_ref)])
    E = ([-1.5, -1.5], [1.5, 1.5])
    vals = []
    for n in (25, 50, 100, 200, 400):
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        vals.append(l1_projection_distance(Cloud(np.c_[np.cos(t), np.sin(t)]), ref, E, 40_000, 0))
    for a, b in zip(vals, vals[1:]):
        assert b.value <= a.value + 3 * math.hypot(a.stderr, b.stderr)
    assert vals[-1].value < 0.2 * vals[0].value


def test_stability_report_fields():
    K2 = jitter(TWO, 1e-3, 2)
    rep = stability_report(TWO, K2, 0.5, E2, 20_000, 3, R=2.0, n_rays=10_000)
    assert rep.delta == pytest.approx(1e-3)
    assert all(math.isfinite(v) for v in (rep.delta, rep.L, rep.measure_DeltaL.value, rep.l1_proj.value, rep.mu_lemma))
    assert rep.inclusion_violations == 0
    assert '"seed": 3' in rep.to_json()


def test_mu_resolution_ignores_face_jumps():
    K = Cloud(np.random.default_rng(2024).random((10, 2)))
    S = sample_mu_medial(K, 0.6, 0.05, 40_000, 0)
    net = net_resolution(S)
    labels = witness_strata(S)
    assert len(np.unique(labels)) > 1
    assert mu_resolution(S, net, labels) <= mu_resolution(S, net)
    assert mu_resolution(S, net, labels) < 0.1
