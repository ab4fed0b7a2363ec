"""Normal distance to the medial axis, mu-medial axis sampling, covering numbers.

Along the gradient ray ``x + t v`` of a point with a unique projection
``p``, the projection stays ``p`` and ``d_K`` grows like ``d_K(x) + t``
until the ray first meets the medial axis, at time ``tau(x)``; the hit
point is ``ell(x)``. Every medial point ``m`` with ``d_K(m) > eps`` is hit
from the level set ``d_K = eps``, so casting rays from random sources and
keeping the hits with small gradient norm samples the mu-medial axis.

For point clouds the hit is computed exactly: the ray leaves the Voronoi
cell of ``p`` through the bisector of ``p`` and some site ``q`` at time::

    t_q = (|x - q|^2 - |x - p|^2) / (2 <v, q - p>)     over <v, q - p> > 0

and ``tau = min_q t_q`` (``+inf`` when no bisector lies ahead).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .distance import gradient_from_projections, projection_set, smallest_enclosing_ball
from .errors import GeometryError, MedialAxisError
from .sampling import CHUNK, map_ordered, sample_uniform, stream
from .shapes import Cloud, bounding_diameter, tie_slack

MEDIAL_TIE = 1e-7


@dataclass(frozen=True)
class MedialPoint:
    m: np.ndarray
    dist: float
    mu: float
    witnesses: np.ndarray
    source: np.ndarray = None


@dataclass
class MedialSample:
    """Array-backed sequence of :class:`MedialPoint`."""

    points: np.ndarray
    dist: np.ndarray
    mu: np.ndarray
    witnesses: list
    sources: np.ndarray
    ray_index: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return MedialPoint(self.points[i], float(self.dist[i]), float(self.mu[i]), self.witnesses[i], self.sources[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, mask):
        idx = np.flatnonzero(mask)
        return MedialSample(
            self.points[idx],
            self.dist[idx],
            self.mu[idx],
            [self.witnesses[i] for i in idx],
            self.sources[idx],
            self.ray_index[idx],
            dict(self.stats),
        )


@dataclass
class _Rays:
    dist: np.ndarray
    p: np.ndarray
    v: np.ndarray
    tau: np.ndarray
    valid: np.ndarray  # outside K and unique projection


def _cloud_crossings(points, X, p, v):
    n, d = points.shape
    tau = np.full(len(X), np.inf)
    step = max(1, 3_000_000 // (n * d))
    for s in range(0, len(X), step):
        xs, ps, vs = X[s : s + step], p[s : s + step], v[s : s + step]
        diff = points[None, :, :] - ps[:, None, :]
        den = 2.0 * np.einsum("bnd,bd->bn", diff, vs)
        num = np.einsum("bnd,bnd->bn", diff, points[None, :, :] + ps[:, None, :] - 2.0 * xs[:, None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(den > 0, num / den, np.inf)
        tau[s : s + step] = np.maximum(t.min(axis=1), 0.0)
    return tau


def _bisect_crossings(shape, X, dist, v):
    # d_K(x + t v) = d_K(x) + t until the crossing and is strictly smaller
    # afterwards (1-Lipschitz), so the crossing time can be bracketed
    def crossed(t, rows):
        gap = dist[rows] + t - shape.distance(X[rows] + t[:, None] * v[rows])
        return gap > 1e-12 * (1.0 + dist[rows] + t)

    t_max = 1e4 * (bounding_diameter(shape) + dist.max(initial=0.0) + 1.0)
    hi = np.maximum(dist, 1e-6 * t_max)
    lo = np.zeros(len(X))
    tau = np.full(len(X), np.inf)
    open_rows = np.arange(len(X))
    while len(open_rows):
        c = crossed(hi[open_rows], open_rows)
        lo[open_rows[~c]] = hi[open_rows[~c]]
        hi[open_rows[~c]] *= 2.0
        open_rows = open_rows[~c & (hi[open_rows] <= t_max)]
    found = np.flatnonzero(hi <= t_max)
    for _ in range(200):
        if len(found) == 0:
            break
        mid = 0.5 * (lo[found] + hi[found])
        c = crossed(mid, found)
        hi[found[c]] = mid[c]
        lo[found[~c]] = mid[~c]
        found = found[(hi[found] - lo[found]) > 1e-13 * (1.0 + hi[found])]
    done = hi <= t_max
    tau[done] = hi[done]
    return tau


def _cast(shape, X, s_tie=None):
    dist, p, _, tie = shape.project_batch(X, s_tie)
    valid = (dist > 0) & ~tie
    safe = np.where(dist > 0, dist, 1.0)
    v = (X - p) / safe[:, None]
    tau = np.full(len(X), np.inf)
    rows = np.flatnonzero(valid)
    if len(rows) and not shape.is_convex:
        if isinstance(shape, Cloud):
            tau[rows] = _cloud_crossings(shape.points, X[rows], p[rows], v[rows])
        else:
            tau[rows] = _bisect_crossings(shape, X[rows], dist[rows], v[rows])
    return _Rays(dist, p, v, tau, valid)


def _single_ray(shape, x, s_tie):
    x = np.asarray(x, dtype=float)
    rays = _cast(shape, x[None, :], s_tie)
    if rays.dist[0] <= 0:
        raise GeometryError("point lies on K: gradient ray undefined")
    if not rays.valid[0]:
        raise MedialAxisError("point on (numerical) medial axis")
    return x, rays


def tau(shape, x, s_tie=None):
    """Travel time along the gradient ray until it meets the medial axis.

    Returns ``inf`` when the ray escapes to infinity (always for convex
    shapes).
    """
    _, rays = _single_ray(shape, x, s_tie)
    return float(rays.tau[0])


def psi(shape, x, t, s_tie=None):
    """Flow ``x + t * grad d_K(x)`` for ``0 <= t <= tau(x)``."""
    x, rays = _single_ray(shape, x, s_tie)
    if t < 0:
        raise ValueError("flow time must be nonnegative")
    if t > rays.tau[0]:
        raise GeometryError(f"crossed medial axis: t={t} > tau={rays.tau[0]}")
    return x + t * rays.v[0]


def _medial_info_cloud(cloud, M):
    pts = cloud.points
    k = min(len(pts), 4)
    dd, ii = cloud.index.k_nearest(M, k)
    dist = dd[:, 0]
    radius = dist + tie_slack(dist, MEDIAL_TIE)
    count = (dd <= radius[:, None]).sum(axis=1)
    mu = np.ones(len(M))
    witnesses = [None] * len(M)
    two = np.flatnonzero(count == 2)
    half = 0.5 * np.linalg.norm(pts[ii[two, 0]] - pts[ii[two, 1]], axis=1)
    mu[two] = np.sqrt(np.clip(1.0 - (half / dist[two]) ** 2, 0.0, 1.0))
    for row in two:
        witnesses[row] = pts[np.sort(ii[row, :2])]
    for row in np.flatnonzero(count >= 3):
        idx = cloud.index.within(M[row], radius[row]) if count[row] == k else np.sort(ii[row, : count[row]])
        w = pts[idx]
        mu[row] = gradient_from_projections(M[row], dist[row], w, radius[row] - dist[row]).mu
        witnesses[row] = w
    for row in np.flatnonzero(count < 2):
        witnesses[row] = pts[ii[row, :1]]
    return dist, mu, witnesses


def _medial_info(shape, M):
    """``(dist, mu, witnesses)`` at candidate medial points, enlarged tie slack."""
    if isinstance(shape, Cloud):
        return _medial_info_cloud(shape, M)
    dist = np.empty(len(M))
    mu = np.ones(len(M))
    witnesses = []
    for row, m in enumerate(M):
        ps = projection_set(shape, m, float(tie_slack(shape.distance(m)[0], MEDIAL_TIE)))
        dist[row] = ps.dist
        if len(ps) >= 2:
            mu[row] = gradient_from_projections(m, ps.dist, ps.projections, ps.tie_slack).mu
        witnesses.append(ps.projections)
    return dist, mu, witnesses


def ell(shape, x, s_tie=None):
    """First medial-axis point on the gradient ray from ``x``."""
    x, rays = _single_ray(shape, x, s_tie)
    t = rays.tau[0]
    if not np.isfinite(t):
        raise GeometryError("gradient ray never meets the medial axis")
    m = x + t * rays.v[0]
    dist, mu, witnesses = _medial_info(shape, m[None, :])
    if len(witnesses[0]) < 2:
        raise GeometryError("ray landing missed the medial axis (single witness)")
    return MedialPoint(m=m, dist=float(dist[0]), mu=float(mu[0]), witnesses=witnesses[0], source=x)


def source_box(shape, eps, margin=None):
    """Bounding box of ``K`` inflated by ``margin`` (default ``max(eps, diam/20)``)."""
    lo, hi = shape.bounds()
    if margin is None:
        margin = max(eps, 0.05 * bounding_diameter(shape))
        if margin <= 0:
            margin = 1.0
    return lo - margin, hi + margin


def sample_mu_medial(shape, mu_max, eps, n_rays, seed, *, margin=None, workers=None):
    """Sample ``Med_mu(K)`` minus the ``eps``-offset of ``K`` by ray casting.

    Sources are uniform in :func:`source_box`; sources inside ``K``, with
    tied projections, or whose ray escapes are discarded. Kept hits satisfy
    ``mu <= mu_max`` and ``d_K >= eps``.
    """
    if not 0 < mu_max <= 1:
        raise ValueError("mu_max must lie in (0, 1]")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n_rays = int(n_rays)
    stats = {"n_rays": n_rays, "n_discarded": 0, "n_escaped": 0, "n_hits": 0}
    empty = MedialSample(
        np.empty((0, shape.dim)), np.empty(0), np.empty(0), [], np.empty((0, shape.dim)), np.empty(0, dtype=np.intp), stats
    )
    if shape.is_convex:
        warnings.warn("convex shape: exterior medial axis is empty", stacklevel=2)
        return empty
    box = source_box(shape, eps, margin)
    X = sample_uniform(box, n_rays, seed)

    def run(c):
        rows = np.arange(c * CHUNK, min(n_rays, (c + 1) * CHUNK))
        rays = _cast(shape, X[rows])
        hit = rays.valid & np.isfinite(rays.tau)
        M = X[rows[hit]] + rays.tau[hit, None] * rays.v[hit]
        dist, mu, wit = _medial_info(shape, M)
        keep = (mu <= mu_max) & (dist >= eps) & np.array([len(w) >= 2 for w in wit], dtype=bool)
        counts = (int((~rays.valid).sum()), int((rays.valid & ~hit).sum()), int(hit.sum()))
        return M[keep], dist[keep], mu[keep], [w for w, k in zip(wit, keep) if k], rows[hit][keep], counts

    parts = map_ordered(run, range(-(-n_rays // CHUNK)), workers)
    for part in parts:
        stats["n_discarded"] += part[5][0]
        stats["n_escaped"] += part[5][1]
        stats["n_hits"] += part[5][2]
    rows = np.concatenate([p[4] for p in parts])
    out = MedialSample(
        points=np.concatenate([p[0] for p in parts]).reshape(-1, shape.dim),
        dist=np.concatenate([p[1] for p in parts]),
        mu=np.concatenate([p[2] for p in parts]),
        witnesses=[w for p in parts for w in p[3]],
        sources=X[rows],
        ray_index=rows,
        stats=stats,
    )
    if len(out) == 0:
        warnings.warn(f"no mu-medial samples retained (mu_max={mu_max}, eps={eps})", stacklevel=2)
    return out


@dataclass
class CoveringReport:
    eta: float
    centers: np.ndarray
    count: int
    descriptor: dict = None


def greedy_net(points, eta, descriptor=None):
    """Greedy ``eta``-net of a finite point set.

    Points are visited in lexicographic order; each point not yet covered
    becomes a centre and covers its closed ``eta``-ball. The centres form
    both an ``eta``-cover and an ``eta``-packing, so the count ``N`` satisfies
    ``N(X, eta) <= N <= N(X, eta / 2)``.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) == 0:
        return CoveringReport(eta, P, 0, descriptor)
    P = P[np.lexsort(P.T[::-1])]
    tree = cKDTree(P)
    covered = np.zeros(len(P), dtype=bool)
    centers = []
    for i in range(len(P)):
        if covered[i]:
            continue
        centers.append(i)
        covered[tree.query_ball_point(P[i], eta)] = True
    return CoveringReport(eta=float(eta), centers=P[centers], count=len(centers), descriptor=descriptor)


@dataclass
class CoveringTable:
    etas: np.ndarray
    counts: np.ndarray
    counts_half_budget: np.ndarray
    stabilized: np.ndarray
    slope: float
    intercept: float
    n_rays: int
    n_samples: int
    mu: float
    eps: float

    @property
    def flagged(self):
        return not bool(np.all(self.stabilized))

    def rows(self):
        return list(zip(self.etas.tolist(), self.counts.tolist(), self.counts_half_budget.tolist(), self.stabilized.tolist()))


def log_slope(x, y):
    """Least-squares slope and intercept of ``log y`` against ``log x``."""
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def covering_scaling_experiment(
    shape, mu, eps, eta_list, seed, *, n_rays=20_000, max_rays=1_000_000, tol=0.05, margin=None, workers=None
):
    """Greedy-net counts of the sampled ``Med_mu(K) \\ K^eps`` across scales.

    The ray budget is doubled until every count changes by less than ``tol``
    (relative) between the budget and its first half, or ``max_rays`` is
    reached; unstable scales are flagged. The slope of ``log N`` against
    ``log(1/eta)`` estimates the dimension of the set.
    """
    etas = np.asarray(eta_list, dtype=float)
    if len(etas) < 2 or np.any(np.diff(etas) >= 0):
        raise ValueError("eta_list must be strictly decreasing with at least two entries")
    n = max(int(n_rays), 1)
    while True:
        sample = sample_mu_medial(shape, mu, eps, 2 * n, seed, margin=margin, workers=workers)
        half = sample.ray_index < n
        full_counts = np.array([greedy_net(sample.points, e).count for e in etas])
        half_counts = np.array([greedy_net(sample.points[half], e).count for e in etas])
        stable = np.abs(full_counts - half_counts) < tol * np.maximum(full_counts, 1)
        if np.all(stable) or 4 * n > max_rays:
            break
        n *= 2
    ok = full_counts > 0
    slope, intercept = log_slope(1.0 / etas[ok], full_counts[ok]) if ok.sum() >= 2 else (float("nan"), float("nan"))
    return CoveringTable(etas, full_counts, half_counts, stable, slope, intercept, 2 * n, len(sample), mu, eps)


def offset_surface_samples(shape, r, n, seed):
    """Points of the level set ``d_K = r``.

    Sources with ``0 < d_K < r`` and a unique projection are pushed outward
    along their gradient ray; the crossing of ``d_K = r`` is bisected to
    ``1e-10``.
    """
    if not r > 0:
        raise ValueError("offset radius must be positive")
    lo, hi = shape.bounds()
    X = sample_uniform((lo - r, hi + r), n, seed)
    dist, p, _, tie = shape.project_batch(X)
    keep = (dist > 0) & (dist < r) & ~tie
    X, p, dist = X[keep], p[keep], dist[keep]
    v = (X - p) / dist[:, None]
    lo_t = np.zeros(len(X))
    hi_t = r - dist
    short = shape.distance(X + hi_t[:, None] * v) < r
    while np.any(short):
        hi_t[short] *= 2.0
        short[short] = shape.distance(X[short] + hi_t[short, None] * v[short]) < r
    while len(X) and np.max(hi_t - lo_t) > 1e-10:
        mid = 0.5 * (lo_t + hi_t)
        below = shape.distance(X + mid[:, None] * v) < r
        lo_t = np.where(below, mid, lo_t)
        hi_t = np.where(below, hi_t, mid)
    return X + hi_t[:, None] * v


def boundary_covering(shape, r, eps, n_samples=20_000, seed=0):
    """Greedy estimate of the covering number ``N(boundary of K^r, eps)``."""
    return greedy_net(offset_surface_samples(shape, r, n_samples, seed), eps).count


def sphere_covering(dim, rho, n_samples=20_000, seed=0):
    """Greedy estimate of ``N(S^{dim-1}, rho)`` from uniform sphere samples."""
    g = stream(seed).standard_normal((n_samples, dim))
    return greedy_net(g / np.linalg.norm(g, axis=1, keepdims=True), rho).count


def witness_half_angle_cos(m, witnesses):
    """Smallest ``cos(angle(x - m, y - m) / 2)`` over witness pairs."""
    u = witnesses - m
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    c = np.clip(u @ u.T, -1.0, 1.0)
    return float(np.sqrt((1.0 + c.min()) / 2.0))


def enclosing_radius(points):
    return smallest_enclosing_ball(points)[1]
