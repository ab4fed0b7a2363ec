"""Compact subsets of R^d: point clouds and a few analytic primitives.

Every shape is immutable after construction and answers three batched
queries that the rest of the package is built on:

``distance(X)``
    exact Euclidean distance from each row of ``X`` to the set;
``project_batch(X, s_tie)``
    one projection per row, a region label for it, and a flag telling
    whether a second, distinct projection exists within the tie slack;
``candidates(x, radius)``
    every projection candidate of a single point within ``radius``.

Solid ``Ball`` and ``Box`` are convex, so their projections are always
unique and their exterior medial axis is empty.
"""

import numpy as np
from scipy.spatial.distance import cdist

from .index import NNIndex

DEFAULT_TIE = 1e-9


def tie_slack(dist, scale=DEFAULT_TIE):
    """Relative tie slack ``scale * (1 + dist)``."""
    return scale * (1.0 + np.asarray(dist, dtype=float))


def _resolve_slack(s_tie, dist):
    if s_tie is None:
        return tie_slack(dist)
    return np.broadcast_to(np.asarray(s_tie, dtype=float), np.shape(dist))


def _as_points(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {X.shape[1]}")
    return X


def _merge(points, tol):
    """Drop points within ``tol`` of an earlier kept point."""
    kept = []
    for p in points:
        if all(np.linalg.norm(p - q) > tol for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, points.shape[1])


class CompactShape:
    dim: int
    n_labels: int

    def bounds(self):
        """Tight axis-aligned bounding box ``(lo, hi)``."""
        raise NotImplementedError

    def distance(self, X):
        return self.project_batch(X)[0]

    def project_batch(self, X, s_tie=None):
        """``(dist, proj, label, tie)`` for every row of ``X``."""
        raise NotImplementedError

    def candidates(self, x, radius):
        """Projection candidates of ``x`` at distance ``<= radius``."""
        raise NotImplementedError

    def _extreme_points(self):
        # (centres, radii) whose weighted diameter equals the shape's diameter
        raise NotImplementedError

    is_convex = False


class Cloud(CompactShape):
    """Finite point set, with a k-d tree built at construction."""

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.size == 0:
            raise ValueError("empty compact set")
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        self.points = pts
        self.dim = pts.shape[1]
        self.n_labels = len(pts)
        self.index = NNIndex(pts)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"Cloud(n={len(self.points)}, d={self.dim})"

    def bounds(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def distance(self, X):
        X = _as_points(X, self.dim)
        return self.index.k_nearest(X, 1)[0][:, 0]

    def project_batch(self, X, s_tie=None):
        X = _as_points(X, self.dim)
        if len(self.points) == 1:
            dist = np.linalg.norm(X - self.points[0], axis=1)
            label = np.zeros(len(X), dtype=np.intp)
            return dist, self.points[label], label, np.zeros(len(X), dtype=bool)
        dd, ii = self.index.k_nearest(X, 2)
        dist = dd[:, 0]
        label = ii[:, 0]
        tie = dd[:, 1] - dist <= _resolve_slack(s_tie, dist)
        return dist, self.points[label], label, tie

    def candidates(self, x, radius):
        idx = self.index.within(x, radius)
        return self.points[idx], idx

    def _extreme_points(self):
        return self.points, np.zeros(len(self.points))


class Ball(CompactShape):
    """Solid Euclidean ball."""

    is_convex = True
    n_labels = 1

    def __init__(self, center, radius):
        self.center = np.array(center, dtype=float).ravel()
        self.radius = float(radius)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        self.dim = len(self.center)

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def project_batch(self, X, s_tie=None):
        X = _as_points(X, self.dim)
        off = X - self.center
        norm = np.linalg.norm(off, axis=1)
        outside = norm > self.radius
        proj = X.copy()
        proj[outside] = self.center + self.radius * off[outside] / norm[outside, None]
        dist = np.where(outside, norm - self.radius, 0.0)
        return dist, proj, np.zeros(len(X), dtype=np.intp), np.zeros(len(X), dtype=bool)

    def candidates(self, x, radius):
        dist, proj, label, _ = self.project_batch(x)
        return (proj, label) if dist[0] <= radius else (proj[:0], label[:0])

    def _extreme_points(self):
        return self.center[None, :], np.array([self.radius])


class Box(CompactShape):
    """Solid axis-aligned box ``[lo, hi]``."""

    is_convex = True
    n_labels = 1

    def __init__(self, lo, hi):
        self.lo = np.array(lo, dtype=float).ravel()
        self.hi = np.array(hi, dtype=float).ravel()
        if self.lo.shape != self.hi.shape:
            raise ValueError("box corners differ in dimension")
        if np.any(self.lo > self.hi):
            raise ValueError("box min corner must be <= max corner")
        self.dim = len(self.lo)

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def bounds(self):
        return self.lo.copy(), self.hi.copy()

    def project_batch(self, X, s_tie=None):
        X = _as_points(X, self.dim)
        proj = np.clip(X, self.lo, self.hi)
        dist = np.linalg.norm(X - proj, axis=1)
        return dist, proj, np.zeros(len(X), dtype=np.intp), np.zeros(len(X), dtype=bool)

    def candidates(self, x, radius):
        dist, proj, label, _ = self.project_batch(x)
        return (proj, label) if dist[0] <= radius else (proj[:0], label[:0])

    def _extreme_points(self):
        corners = np.array(np.meshgrid(*zip(self.lo, self.hi), indexing="ij")).reshape(self.dim, -1).T
        return corners, np.zeros(len(corners))


class SegmentSet(CompactShape):
    """Finite union of closed segments, given as an ``(m, 2, d)`` array."""

    def __init__(self, segments):
        seg = np.array(segments, dtype=float)
        if seg.ndim != 3 or seg.shape[1] != 2 or len(seg) == 0:
            raise ValueError("segments must be a nonempty (m, 2, d) array")
        seg.setflags(write=False)
        self.segments = seg
        self.dim = seg.shape[2]
        self.n_labels = len(seg)
        self.is_convex = len(seg) == 1

    def __repr__(self):
        return f"SegmentSet(m={len(self.segments)}, d={self.dim})"

    def bounds(self):
        flat = self.segments.reshape(-1, self.dim)
        return flat.min(axis=0), flat.max(axis=0)

    def _closest_all(self, X):
        A, B = self.segments[:, 0], self.segments[:, 1]
        AB = B - A
        len2 = np.einsum("md,md->m", AB, AB)
        t = np.einsum("bmd,md->bm", X[:, None, :] - A[None], AB) / np.where(len2 > 0, len2, 1.0)
        t = np.clip(t, 0.0, 1.0)
        C = A[None] + t[..., None] * AB[None]
        return C, np.linalg.norm(X[:, None, :] - C, axis=2)

    def project_batch(self, X, s_tie=None):
        X = _as_points(X, self.dim)
        out_d, out_p, out_l, out_t = [], [], [], []
        step = max(1, 1_000_000 // (len(self.segments) * self.dim))
        for s in range(0, len(X), step):
            C, D = self._closest_all(X[s : s + step])
            j = np.argmin(D, axis=1)
            rows = np.arange(len(j))
            dist = D[rows, j]
            proj = C[rows, j]
            slack = _resolve_slack(s_tie, dist)
            apart = np.linalg.norm(C - proj[:, None, :], axis=2) > slack[:, None]
            near = D <= (dist + slack)[:, None]
            out_d.append(dist)
            out_p.append(proj)
            out_l.append(j)
            out_t.append(np.any(apart & near, axis=1))
        return np.concatenate(out_d), np.concatenate(out_p), np.concatenate(out_l), np.concatenate(out_t)

    def candidates(self, x, radius):
        C, D = self._closest_all(_as_points(x, self.dim))
        keep = np.flatnonzero(D[0] <= radius)
        pts = C[0, keep]
        merged = _merge(pts, max(radius - D[0].min(), 0.0))
        labels = np.array([keep[np.flatnonzero(np.all(pts == m, axis=1))[0]] for m in merged], dtype=np.intp)
        return merged, labels

    def _extreme_points(self):
        flat = self.segments.reshape(-1, self.dim)
        return flat, np.zeros(len(flat))


class Union(CompactShape):
    """Finite union of shapes of one dimension; labels are offset per member."""

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("union must have at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise ValueError("union members differ in dimension")
        self.members = tuple(members)
        self.dim = dims.pop()
        self.offsets = np.cumsum([0] + [m.n_labels for m in members])
        self.n_labels = int(self.offsets[-1])

    def __repr__(self):
        return f"Union({', '.join(map(repr, self.members))})"

    def bounds(self):
        b = [m.bounds() for m in self.members]
        return np.min([lo for lo, _ in b], axis=0), np.max([hi for _, hi in b], axis=0)

    def project_batch(self, X, s_tie=None):
        X = _as_points(X, self.dim)
        parts = [m.project_batch(X, s_tie) for m in self.members]
        D = np.stack([p[0] for p in parts], axis=1)
        k = np.argmin(D, axis=1)
        rows = np.arange(len(X))
        dist = D[rows, k]
        P = np.stack([p[1] for p in parts], axis=1)
        proj = P[rows, k]
        label = np.stack([p[2] + off for p, off in zip(parts, self.offsets)], axis=1)[rows, k]
        slack = _resolve_slack(s_tie, dist)
        near = D <= (dist + slack)[:, None]
        apart = np.linalg.norm(P - proj[:, None, :], axis=2) > slack[:, None]
        own_tie = np.stack([p[3] for p in parts], axis=1)
        tie = np.any(near & (apart | own_tie), axis=1)
        return dist, proj, label, tie

    def candidates(self, x, radius):
        pts, labels = [], []
        for m, off in zip(self.members, self.offsets):
            p, lab = m.candidates(x, radius)
            pts.append(p)
            labels.append(lab + off)
        pts = np.concatenate(pts)
        labels = np.concatenate(labels)
        if len(pts) == 0:
            return pts, labels
        dmin = np.linalg.norm(pts - np.asarray(x, dtype=float), axis=1).min()
        merged = _merge(pts, max(radius - dmin, 0.0))
        keep = [int(np.flatnonzero(np.all(pts == m, axis=1))[0]) for m in merged]
        return merged, labels[keep]

    def _extreme_points(self):
        pts, rad = zip(*(m._extreme_points() for m in self.members))
        return np.concatenate(pts), np.concatenate(rad)


def _weighted_diameter(P, rad):
    # max over pairs (i, j), i == j allowed, of |p_i - p_j| + r_i + r_j
    best = 0.0
    step = max(1, 4_000_000 // max(len(P), 1))
    for s in range(0, len(P), step):
        D = cdist(P[s : s + step], P) + rad[s : s + step, None] + rad[None, :]
        best = max(best, float(D.max()))
    return best


def bounding_diameter(shape):
    """Exact diameter of a shape.

    The farthest pair of a union of polytopes and balls is realised by
    vertices and ball centres (plus radii), so the weighted vertex diameter
    is exact for every variant. Clouds cost ``O(n^2)`` distance evaluations.
    """
    return _weighted_diameter(*shape._extreme_points())


def comb(teeth=8, step=0.05, length=1.0):
    """Discretised comb: teeth ``[0, length] x {2^-i}`` for ``i = 0..teeth-1``."""
    xs = np.linspace(0.0, length, int(round(length / step)) + 1)
    ys = 2.0 ** -np.arange(teeth)
    return Cloud([(x, y) for y in ys for x in xs])
