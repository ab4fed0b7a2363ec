"""Sampling the mu-medial axis of a point cloud.

Two sites at (-1, 0) and (1, 0): the medial axis is the y-axis, and the
gradient norm at (0, y) is |y| / sqrt(1 + y^2). So Med_mu is the segment
|y| <= mu / sqrt(1 - mu^2), which the sampler should recover.
"""

import numpy as np

from geoinfer import Cloud, comb, covering_scaling_experiment, sample_mu_medial, tau

K = Cloud([[-1.0, 0.0], [1.0, 0.0]])

# the flow from (0.5, 0) runs left and meets the axis after 0.5
print("tau((0.5, 0)) =", tau(K, [0.5, 0.0]))

for mu in (0.3, 0.6, 0.9):
    S = sample_mu_medial(K, mu, 0.0, 100_000, seed=1, margin=1.0)
    ext = np.abs(S.points[:, 1]).max()
    print(f"mu={mu}: {len(S):6d} hits, extent {ext:.4f}, exact {mu / np.sqrt(1 - mu**2):.4f}")

# a comb of 8 teeth accumulating at y = 0; away from K (eps = 0.2) only one
# medial segment survives, so covering numbers grow like 1/eta
T = covering_scaling_experiment(comb(), 0.3, 0.2, np.geomspace(0.2, 0.01, 8), seed=0)
for eta, count, half, ok in T.rows():
    print(f"eta={eta:.4f}  N={count:4d}  (half budget {half})")
print(f"log-log slope {T.slope:.3f}")
