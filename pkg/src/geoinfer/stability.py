"""Empirical checks of Hausdorff stability.

All estimators here share one sample stream between the two compact sets
being compared: the same uniform points of ``E`` are projected on ``K`` and
on ``K'``. Points whose projection is tied on either set are removed from
both sides.
"""

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryError
from .measures import DiscreteMeasure, directed_hausdorff, hausdorff, wasserstein1
from .medial import sample_mu_medial
from .sampling import _box_bounds, box_volume, map_ordered, sample_uniform, stream
from .shapes import Cloud


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def __float__(self):
        return self.value


@dataclass
class CoupledSample:
    X: np.ndarray
    pK: np.ndarray
    pK2: np.ndarray
    labelK: np.ndarray
    labelK2: np.ndarray
    volume: float
    n_drawn: int
    n_ties: int

    @property
    def gap(self):
        return np.linalg.norm(self.pK - self.pK2, axis=1)


def coupled_projections(K, K2, E, n, seed, *, workers=None, warn=True):
    """Project one sample stream of the box ``E`` on both ``K`` and ``K2``."""
    lo, hi = _box_bounds(E)
    X = sample_uniform((lo, hi), n, seed, workers=workers)
    _, p1, l1, t1 = K.project_batch(X)
    _, p2, l2, t2 = K2.project_batch(X)
    keep = ~(t1 | t2)
    n_ties = int((~keep).sum())
    if warn and n_ties > 0.01 * len(X):
        warnings.warn(f"{n_ties} of {len(X)} samples discarded as ties: degenerate configuration", stacklevel=2)
    if not keep.any():
        raise GeometryError("every sample has tied projections")
    return CoupledSample(X[keep], p1[keep], p2[keep], l1[keep], l2[keep], box_volume((lo, hi)), len(X), n_ties)


def _mean_estimate(values, scale):
    n = len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(scale * float(np.mean(values)), scale * se)


def l1_projection_distance(K, K2, E, n, seed, *, workers=None):
    """``|| p_K - p_K' ||_{L^1(E)}`` with its Monte Carlo standard error."""
    cs = coupled_projections(K, K2, E, n, seed, workers=workers)
    return _mean_estimate(cs.gap, cs.volume)


# ---------------------------------------------------------------- transport bound


@dataclass
class TransportBound:
    w1: float  # normalised W1 of the two boundary measures
    w1_stderr: float
    l1: Estimate  # normalised L1 projection distance
    combined_stderr: float

    @property
    def holds(self):
        return self.w1 <= self.l1.value + 3.0 * self.combined_stderr


def _cloud_measure(points, labels, n_labels, weight):
    return DiscreteMeasure(points, np.bincount(labels, minlength=n_labels) * weight)


def transport_bound(K, K2, E, n, seed, *, batches=10, workers=None):
    """Compare W1 of the normalised boundary measures with the L1 projection distance.

    Both measures come from the same samples. Clouds aggregate mass on their
    points, so the transport problem stays small. The W1 standard error is
    the spread of per-batch values over ``sqrt(batches)``.
    """
    if not (isinstance(K, Cloud) and isinstance(K2, Cloud)):
        raise ValueError("transport bound is implemented for point clouds")
    cs = coupled_projections(K, K2, E, n, seed, workers=workers)
    m = len(cs.X)

    def w1_of(rows):
        w = 1.0 / len(rows)
        a = _cloud_measure(K.points, cs.labelK[rows], len(K.points), w)
        b = _cloud_measure(K2.points, cs.labelK2[rows], len(K2.points), w)
        return wasserstein1(a, b)[0]

    w1 = w1_of(np.arange(m))
    per_batch = [w1_of(rows) for rows in np.array_split(np.arange(m), batches) if len(rows)]
    w1_se = float(np.std(per_batch, ddof=1) / math.sqrt(len(per_batch))) if len(per_batch) > 1 else 0.0
    l1 = _mean_estimate(cs.gap, 1.0)
    return TransportBound(w1, w1_se, l1, math.hypot(l1.stderr, w1_se))


# ---------------------------------------------------------------- Delta_L


@dataclass
class DeltaL:
    measure: Estimate
    X: np.ndarray
    pK: np.ndarray
    pK2: np.ndarray
    L: float
    n_kept: int


def delta_L_measure(K, K2, L, E, n, seed, *, workers=None):
    """Volume of ``{x in E : |p_K(x) - p_K'(x)| >= L}`` and the samples in it."""
    if isinstance(K, Cloud) and isinstance(K2, Cloud):
        dh = hausdorff(K, K2)
        if not L > 2 * dh:
            raise ValueError(f"need L > 2 d_H = {2 * dh}")
    cs = coupled_projections(K, K2, E, n, seed, workers=workers)
    hit = cs.gap >= L
    est = _mean_estimate(hit.astype(float), cs.volume)
    return DeltaL(est, cs.X[hit], cs.pK[hit], cs.pK2[hit], float(L), len(cs.X))


def lemma_mu(L, R, delta):
    """``(1 + ((L - delta) / 4R)^2)^(-1/2) + 4 sqrt(delta / L)``."""
    return 1.0 / math.sqrt(1.0 + ((L - delta) / (4.0 * R)) ** 2) + 4.0 * math.sqrt(delta / L)


def net_resolution(sample, max_dist=math.inf):
    """Gap estimate of a ray-cast medial sample: how far the hits of the second
    half of the rays land from those of the first half.

    Only hits with ``d_K <= max_dist`` are probed.
    """
    if len(sample) == 0:
        return math.inf
    first = sample.ray_index < sample.stats.get("n_rays", 2 * (sample.ray_index.max() + 1)) // 2
    A = sample.points[first]
    B = sample.points[~first & (sample.dist <= max_dist)]
    if len(A) == 0 or len(B) == 0:
        return math.inf
    return directed_hausdorff(B, A)


def witness_strata(sample):
    """Integer label per hit: equal labels mean identical witness sets."""
    keys = [np.ascontiguousarray(w[np.lexsort(w.T[::-1])]).tobytes() for w in sample.witnesses]
    return np.unique(keys, return_inverse=True)[1].ravel()


def mu_resolution(sample, net, strata=None):
    """Largest change of the sampled gradient norm between hits at most ``net`` apart.

    A true medial point ``y`` has a sampled neighbour within ``net`` whose
    ``mu`` may exceed ``mu(y)`` by about this much. With ``strata`` only
    neighbours carrying the same label are compared, which keeps the jumps of
    ``mu`` between Voronoi faces out of the estimate.
    """
    if len(sample) < 2 or not math.isfinite(net):
        return 0.0
    k = min(9, len(sample))
    dd, ii = cKDTree(sample.points).query(sample.points, k=k, distance_upper_bound=net)
    ok = np.isfinite(dd)
    nb = np.where(ok, ii, 0)
    if strata is not None:
        ok &= strata[nb] == strata[:, None]
    diff = np.abs(sample.mu[nb] - sample.mu[:, None])
    return float(np.max(np.where(ok, diff, 0.0)))


@dataclass
class InclusionReport:
    mu: float
    conclusive: bool
    mu_used: float
    violations: int
    n_checked: int
    tolerance: float
    net_resolution: float
    n_medial: int
    max_excess: float
    sweep: list = field(default_factory=list)  # (n_rays, violations)


def check_delta_inclusion(K, K2, L, R, samples, *, delta=None, n_rays=200_000, seed=0, budgets=None, workers=None):
    """Count ``Delta_L`` samples farther than ``2 sqrt(R delta) + net`` from ``Med_mu(K)``.

    ``samples`` holds points of ``Delta_L`` (a :class:`DeltaL` or an array);
    only those with ``d_K <= R`` are checked. When the lemma's ``mu`` is at
    least 1 the statement is vacuous: the report is flagged inconclusive and
    the points are checked against the whole sampled medial axis instead.

    ``budgets`` lists increasing ray counts; violations are recorded for each
    prefix of one ray stream, with the tolerance fixed at the largest.
    """
    X = np.asarray(getattr(samples, "X", samples), dtype=float).reshape(-1, K.dim)
    if delta is None:
        delta = hausdorff(K, K2)
    mu = lemma_mu(L, R, delta)
    conclusive = mu < 1.0
    mu_used = mu if conclusive else 1.0
    X = X[K.distance(X) <= R] if len(X) else X
    budgets = sorted({int(b) for b in (budgets or [])} | {int(n_rays)})
    med = sample_mu_medial(K, mu_used, 0.0, budgets[-1], seed, margin=R, workers=workers)
    net = net_resolution(med, R)
    tol = 2.0 * math.sqrt(R * delta) + net
    sweep = []
    excess = 0.0
    for b in budgets:
        pts = med.points[med.ray_index < b]
        if len(X) == 0:
            sweep.append((b, 0))
            continue
        if len(pts) == 0:
            sweep.append((b, len(X)))
            continue
        dist = cKDTree(pts).query(X)[0]
        sweep.append((b, int((dist > tol).sum())))
        excess = float(np.max(dist - tol))
    return InclusionReport(
        mu=mu,
        conclusive=conclusive,
        mu_used=mu_used,
        violations=sweep[-1][1],
        n_checked=len(X),
        tolerance=tol,
        net_resolution=net,
        n_medial=len(med),
        max_excess=excess,
        sweep=sweep,
    )


# ---------------------------------------------------------------- critical points


@dataclass
class CriticalReport:
    epsilon: float
    violations: int
    n_checked: int
    n_vacuous: int
    net_resolution: float
    mu_resolution: float
    n_medial: int
    sweep: list = field(default_factory=list)


def check_critical_stability(K, K2, mu_points, *, n_rays=200_000, seed=0, budgets=None, workers=None):
    """Check that every ``mu``-critical point of ``K`` has a ``mu'``-critical
    point of ``K'`` nearby.

    For each medial point ``x`` (with its own ``mu``), ``mu' = mu + 2 sqrt(eps /
    d_K(x))`` and the search radius is ``2 sqrt(eps d_K(x))`` plus the net
    resolution of the sampled medial axis of ``K'``; sampled candidates
    qualify when their ``mu`` is at most ``mu'`` plus the sample's
    :func:`mu_resolution`. Points with ``mu' >= 1`` are vacuous (``x`` itself
    qualifies).
    """
    pts = np.array([p.m for p in mu_points]).reshape(-1, K.dim)
    mus = np.array([p.mu for p in mu_points])
    dks = np.array([p.dist for p in mu_points])
    eps = hausdorff(K, K2)
    mu_prime = mus + 2.0 * np.sqrt(eps / dks) if len(pts) else mus
    radius = 2.0 * np.sqrt(eps * dks)
    active = mu_prime < 1.0
    budgets = sorted({int(b) for b in (budgets or [])} | {int(n_rays)})
    margin = float(dks.max()) if len(dks) else None
    top = float(mu_prime[active].max()) + 0.1 if active.any() else 1.0
    med = sample_mu_medial(K2, min(top, 1.0), 0.0, budgets[-1], seed, margin=margin, workers=workers) if active.any() else None
    net = net_resolution(med, float(dks.max())) if med is not None else 0.0
    strata = witness_strata(med) if isinstance(K2, Cloud) and med is not None and len(med) else None
    mres = mu_resolution(med, net, strata) if med is not None else 0.0
    sweep = []
    for b in budgets:
        fails = 0
        if med is not None:
            sel = med.ray_index < b
            cand, cand_mu = med.points[sel], med.mu[sel]
            tree = cKDTree(cand) if len(cand) else None
            for i in np.flatnonzero(active):
                near = tree.query_ball_point(pts[i], radius[i] + net) if tree is not None else []
                if not np.any(cand_mu[near] <= mu_prime[i] + mres):
                    fails += 1
        sweep.append((b, fails))
    return CriticalReport(
        eps, sweep[-1][1], int(active.sum()), int((~active).sum()), net, mres, 0 if med is None else len(med), sweep
    )


# ---------------------------------------------------------------- Holder


@dataclass
class HolderCurve:
    deltas: list
    hausdorff: list  # mean exact d_H per delta
    l1: list
    l1_stderr: list
    h_emp: float
    h_ref: float
    C: float
    bound_holds: bool
    monotone: bool
    trials: int
    seed: int

    @property
    def flagged(self):
        return not self.monotone

    def to_dict(self):
        return asdict(self)

    def rows(self):
        return list(zip(self.deltas, self.hausdorff, self.l1, self.l1_stderr))


def jitter(K, delta, seed, *key):
    """Move every point of a cloud by ``delta`` in a random direction."""
    u = stream(seed, *key).standard_normal(K.points.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return Cloud(K.points + delta * u)


def holder_experiment(K, E, delta_list, trials=4, seed=0, *, n=100_000, workers=None):
    """L1 projection distance between ``K`` and jittered copies, per ``delta``.

    Trial ``t`` uses the same jitter directions and the same sample stream for
    every ``delta``, so the curve is smooth in ``delta``. The reference
    exponent is ``1 / (2 (2d - 1))``; ``C`` is fitted at the largest
    ``delta`` and the bound ``l1 <= C delta^h_ref`` (plus three standard
    errors) is checked at the others.
    """
    deltas = np.asarray(delta_list, dtype=float)
    if np.any(np.diff(deltas) >= 0) or np.any(deltas < 0):
        raise ValueError("delta_list must be nonnegative and strictly decreasing")
    d = K.dim
    h_ref = 1.0 / (2.0 * (2.0 * d - 1.0))

    def run(job):
        t, dl = job
        if dl == 0:
            return 0.0, Estimate(0.0, 0.0)
        K2 = jitter(K, dl, seed, 1, t)
        return hausdorff(K, K2), l1_projection_distance(K, K2, E, n, stream(seed, 2, t).integers(2**63))

    jobs = [(t, dl) for dl in deltas for t in range(trials)]
    res = map_ordered(run, jobs, workers)
    dh = np.array([r[0] for r in res]).reshape(len(deltas), trials).mean(axis=1)
    vals = np.array([r[1].value for r in res]).reshape(len(deltas), trials)
    ses = np.array([r[1].stderr for r in res]).reshape(len(deltas), trials)
    l1 = vals.mean(axis=1)
    # trials are independent: combine their standard errors, plus trial spread
    se = np.sqrt((ses**2).sum(axis=1)) / trials
    if trials > 1:
        se = np.sqrt(se**2 + vals.var(axis=1, ddof=1) / trials)
    pos = (deltas > 0) & (l1 > 0)
    h_emp = float(np.polyfit(np.log(deltas[pos]), np.log(l1[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    C = float(l1[0] / deltas[0] ** h_ref) if deltas[0] > 0 else float("nan")
    bound = C * deltas**h_ref
    # C is fitted at deltas[0], where the bound is met up to rounding
    bound_holds = bool(np.all(l1 <= bound * (1 + 1e-12) + 3.0 * se))
    monotone = bool(np.all(l1[1:] <= l1[:-1] + 3.0 * np.hypot(se[1:], se[:-1])))
    return HolderCurve(
        deltas=deltas.tolist(),
        hausdorff=dh.tolist(),
        l1=l1.tolist(),
        l1_stderr=se.tolist(),
        h_emp=h_emp,
        h_ref=h_ref,
        C=C,
        bound_holds=bound_holds,
        monotone=monotone,
        trials=int(trials),
        seed=int(seed),
    )


# ---------------------------------------------------------------- report


@dataclass
class StabilityReport:
    delta: float
    L: float
    R: float
    measure_DeltaL: Estimate
    l1_proj: Estimate
    mu_lemma: float
    conclusive: bool
    inclusion_violations: int
    tolerance: float
    n_checked: int
    seed: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def stability_report(K, K2, L, E, n, seed, *, R=None, n_rays=200_000, workers=None):
    """Delta_L volume, L1 projection distance and the inclusion check in one pass.

    ``R`` defaults to the largest ``d_K`` over the samples of ``E`` (a lower
    estimate of ``sup_E d_K`` that covers every sample used).
    """
    delta = hausdorff(K, K2)
    dl = delta_L_measure(K, K2, L, E, n, seed, workers=workers)
    l1 = l1_projection_distance(K, K2, E, n, seed, workers=workers)
    if R is None:
        lo, hi = _box_bounds(E)
        R = float(K.distance(sample_uniform((lo, hi), n, seed, workers=workers)).max())
    inc = check_delta_inclusion(K, K2, L, R, dl, delta=delta, n_rays=n_rays, seed=seed, workers=workers)
    return StabilityReport(
        delta=delta,
        L=float(L),
        R=float(R),
        measure_DeltaL=dl.measure,
        l1_proj=l1,
        mu_lemma=inc.mu,
        conclusive=inc.conclusive,
        inclusion_violations=inc.violations,
        tolerance=inc.tolerance,
        n_checked=inc.n_checked,
        seed=int(seed),
    )
