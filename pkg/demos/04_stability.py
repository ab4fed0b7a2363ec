"""Stability of projections and critical points under perturbation."""

import numpy as np

from geoinfer import Cloud, check_critical_stability, holder_experiment, sample_mu_medial, stability_report
from geoinfer.stability import jitter

K = Cloud(np.random.default_rng(2024).random((10, 2)))
E = ([-0.5, -0.5], [1.5, 1.5])

# projections move by O(delta^h) in L1; for finite clouds the observed
# exponent is close to 1, far better than the worst-case 1/(2(2d-1))
curve = holder_experiment(K, E, np.geomspace(0.1, 1e-4, 7), trials=4, seed=1, n=100_000)
for delta, dh, l1, se in curve.rows():
    print(f"delta={delta:.1e}  l1={l1:.3e} +- {se:.1e}")
print(f"fitted exponent {curve.h_emp:.2f}, reference {curve.h_ref:.3f}, bound holds: {curve.bound_holds}")

# every mu-critical point of K has a mu'-critical point of K' nearby
K2 = jitter(K, 1e-3, 3)
S = sample_mu_medial(K, 0.6, 0.05, 20_000, seed=0)
rep = check_critical_stability(K, K2, S, n_rays=160_000, seed=1)
print(f"\n{rep.n_checked} critical points checked, {rep.violations} without a partner")

rep = stability_report(K, K2, 0.2, E, 100_000, seed=4, n_rays=50_000)
print(rep.to_json())
