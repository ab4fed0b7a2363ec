"""Boundary measures and the transport bound.

The boundary measure pushes the volume of E onto K through the projection.
Two nearby clouds have nearby boundary measures: W1 is bounded by the mean
distance between the two projections of the same point.
"""

import numpy as np

from geoinfer import Cloud, boundary_measure, hausdorff
from geoinfer.stability import jitter, transport_bound

rng = np.random.default_rng(0)
K = Cloud(rng.random((30, 2)))
E = ([-0.5, -0.5], [1.5, 1.5])

m = boundary_measure(K, E, 200_000, seed=1)
order = np.argsort(m.masses)[::-1]
print("heaviest points (hull vertices collect the outer volume):")
for i in order[:5]:
    print(f"  {m.atoms[i].round(3)}  mass {m.masses[i]:.3f}")
print(f"total {m.total} = vol(E)")

for delta in (0.1, 0.01, 0.001):
    K2 = jitter(K, delta, 2)
    tb = transport_bound(K, K2, E, 50_000, seed=3)
    print(f"d_H={hausdorff(K, K2):.4f}  W1={tb.w1:.5f}  L1={tb.l1.value:.5f} +- {tb.combined_stderr:.1e}")
