"""Exact nearest-neighbour queries over a point cloud."""

import numpy as np
from scipy.spatial import cKDTree


class NNIndex:
    """k-d tree over an ``(n, d)`` array of points.

    All queries are exact. Exact distance ties in :meth:`nearest` are broken
    towards the lowest point index so results do not depend on tree layout.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("empty compact set")
        self.points = pts
        self._tree = cKDTree(pts)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def nearest(self, x):
        """Distance to and index of the closest point, for one query or a batch."""
        X = np.asarray(x, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if len(self.points) == 1:
            dist = np.linalg.norm(X - self.points[0], axis=1)
            idx = np.zeros(len(X), dtype=np.intp)
        else:
            dd, ii = self._tree.query(X, k=2)
            dist, idx = dd[:, 0].copy(), ii[:, 0].copy()
            for row in np.flatnonzero(dd[:, 1] <= dd[:, 0]):
                cand = np.asarray(self._tree.query_ball_point(X[row], dd[row, 0] * (1 + 1e-12) + 1e-300))
                cd = np.linalg.norm(self.points[cand] - X[row], axis=1)
                best = cand[cd == cd.min()].min()
                idx[row] = best
                dist[row] = np.linalg.norm(self.points[best] - X[row])
        if single:
            return float(dist[0]), int(idx[0])
        return dist, idx

    def k_nearest(self, x, k):
        """``(dist, idx)`` of the ``k`` closest points, sorted by distance."""
        k = min(int(k), len(self.points))
        dd, ii = self._tree.query(np.asarray(x, dtype=float), k=k)
        if k == 1:
            dd, ii = dd[..., None], ii[..., None]
        return dd, ii

    def within(self, x, r):
        """Sorted indices of all points at distance ``<= r`` from ``x``."""
        x = np.asarray(x, dtype=float)
        cand = np.asarray(self._tree.query_ball_point(x, r * (1 + 1e-12) + 1e-300), dtype=np.intp)
        if len(cand) == 0:
            return cand
        # the tree pads the radius slightly; re-filter with the plain Euclidean norm
        keep = np.linalg.norm(self.points[cand] - x, axis=1) <= r
        return np.sort(cand[keep])

    def within_batch(self, X, r):
        """List of index arrays, one per row of ``X``; ``r`` may be per-row."""
        return [self.within(x, ri) for x, ri in zip(np.atleast_2d(X), np.broadcast_to(r, (len(np.atleast_2d(X)),)))]


def build_index(cloud):
    """Index a :class:`~geoinfer.shapes.Cloud` (or a raw point array)."""
    points = getattr(cloud, "points", cloud)
    return NNIndex(points)
