"""Boundary measures, Hausdorff and Wasserstein-1 distances.

The boundary measure of ``K`` relative to a region ``E`` is the image of the
Lebesgue measure on ``E`` under the projection ``p_K``. It is estimated by
Monte Carlo: each uniform sample of ``E`` carries mass ``vol(E) / n`` to its
projection. Samples with tied projections lie on the medial axis, a null
set, and are dropped (the surviving samples share the full mass).
"""

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import GeometryError
from .sampling import box_volume, sample_box, _box_bounds
from .shapes import Cloud

MAX_ATOMS = 2000


@dataclass(frozen=True)
class Offset:
    """The offset region ``K^r = {x : d_K(x) <= r}`` of the measured shape."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("offset radius must be positive")


class DiscreteMeasure:
    """Finite weighted point set."""

    def __init__(self, atoms, masses, total=None, seed=None):
        atoms = np.asarray(atoms, dtype=float)
        masses = np.asarray(masses, dtype=float).ravel()
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if len(atoms) != len(masses):
            raise ValueError("atoms and masses differ in length")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite and nonnegative")
        s = math.fsum(masses)
        if total is None:
            total = s
        elif abs(total - s) > 1e-12 * max(abs(total), abs(s), 1e-300):
            raise ValueError(f"total {total} does not match the sum of masses {s}")
        self.atoms = atoms
        self.masses = masses
        self.total = float(total)
        self.seed = seed

    def __len__(self):
        return len(self.masses)

    def __repr__(self):
        return f"DiscreteMeasure(n={len(self)}, total={self.total:.6g})"

    @property
    def dim(self):
        return self.atoms.shape[1]

    def normalized(self):
        if self.total <= 0:
            raise ValueError("cannot normalise a zero measure")
        return DiscreteMeasure(self.atoms, self.masses / self.total, seed=self.seed)

    def support(self):
        """Restriction to atoms of positive mass."""
        keep = self.masses > 0
        return DiscreteMeasure(self.atoms[keep], self.masses[keep], seed=self.seed)

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# total={self.total!r} seed={self.seed}\n")
        buf.write(",".join([f"x{i + 1}" for i in range(self.dim)] + ["mass"]) + "\n")
        for a, m in zip(self.atoms, self.masses):
            buf.write(",".join(format(float(v), ".17g") for v in (*a, m)) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            lines = fh.read().splitlines()
        meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()]).reshape(-1, len(lines[1].split(",")))
        seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
        return cls(rows[:, :-1], rows[:, -1], total=float(meta["total"]), seed=seed)


@dataclass
class Pushforward:
    """Accepted samples of a region with their projections on ``K``."""

    X: np.ndarray
    proj: np.ndarray
    label: np.ndarray
    dist: np.ndarray
    weight: float  # mass carried by each kept sample
    volume: float  # vol(E), exact for boxes, estimated for offsets
    n_drawn: int
    n_inside: int
    n_ties: int


def region_box(shape, E):
    """Sampling box of a region: ``E`` itself or the bounding box of ``K^r``."""
    if isinstance(E, Offset):
        lo, hi = shape.bounds()
        return lo - E.r, hi + E.r
    return _box_bounds(E)


def pushforward(shape, E, n_samples, seed, *, sampler="random", key=(), workers=None):
    """Sample ``E`` and project the accepted samples onto ``shape``."""
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("need at least one sample")
    lo, hi = region_box(shape, E)
    if len(lo) != shape.dim:
        raise ValueError("region and shape differ in dimension")
    bbox_vol = box_volume((lo, hi))
    if not bbox_vol > 0:
        raise ValueError("region has zero volume")
    X = sample_box((lo, hi), n_samples, seed, key=key, sampler=sampler, workers=workers)
    dist, proj, label, tie = shape.project_batch(X)
    inside = dist <= E.r if isinstance(E, Offset) else np.ones(len(X), dtype=bool)
    n_inside = int(inside.sum())
    if n_inside < 1e-3 * len(X):
        raise GeometryError("E/bounding box mismatch: acceptance rate below 1e-3")
    volume = bbox_vol * n_inside / len(X) if isinstance(E, Offset) else bbox_vol
    keep = inside & ~tie
    n_keep = int(keep.sum())
    if n_keep == 0:
        raise GeometryError("every accepted sample has tied projections")
    return Pushforward(
        X=X[keep],
        proj=proj[keep],
        label=label[keep],
        dist=dist[keep],
        weight=volume / n_keep,
        volume=volume,
        n_drawn=len(X),
        n_inside=n_inside,
        n_ties=int((inside & tie).sum()),
    )


def boundary_measure(shape, E, n_samples, seed, *, sampler="random", workers=None):
    """Monte Carlo boundary measure of ``shape`` relative to ``E``.

    ``E`` is a :class:`~geoinfer.shapes.Box`, a ``(lo, hi)`` pair or an
    :class:`Offset`. For clouds the atoms are the cloud points (possibly with
    zero mass); otherwise they are the distinct projected points.
    """
    pf = pushforward(shape, E, n_samples, seed, sampler=sampler, workers=workers)
    if isinstance(shape, Cloud):
        counts = np.bincount(pf.label, minlength=len(shape.points))
        atoms = shape.points
    else:
        atoms, counts = np.unique(pf.proj, axis=0, return_counts=True)
    masses = counts * pf.weight
    # rescale so the total is vol(E) up to rounding of the sum itself
    masses = masses * (pf.volume / math.fsum(masses))
    return DiscreteMeasure(atoms, masses, total=pf.volume, seed=seed)


def _as_array(A):
    P = np.asarray(getattr(A, "points", A), dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) == 0:
        raise ValueError("empty compact set")
    return P


def directed_hausdorff(A, B):
    """``max_{a in A} min_{b in B} |a - b|``."""
    P, Q = _as_array(A), _as_array(B)
    return float(cKDTree(Q).query(P)[0].max())


def hausdorff(A, B):
    """Exact Hausdorff distance between two point clouds."""
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))


@dataclass
class TransportPlan:
    flows: list  # (i, j, mass)
    cost: float

    def matrix(self, n, m):
        T = np.zeros((n, m))
        for i, j, f in self.flows:
            T[i, j] += f
        return T


def _tree_flows(support, a, b):
    # flows on a forest support are fixed by the marginals: peel leaves
    n = len(a)
    rem = np.concatenate([a, b]).astype(float)
    adj = {}
    for e, (i, j) in enumerate(support):
        adj.setdefault(i, set()).add(e)
        adj.setdefault(n + j, set()).add(e)
    flows = np.zeros(len(support))
    leaves = [v for v, es in adj.items() if len(es) == 1]
    while leaves:
        v = leaves.pop()
        if len(adj[v]) != 1:
            continue
        e = adj[v].pop()
        i, j = support[e]
        u = n + j if v == i else i
        flows[e] = max(rem[v], 0.0)
        rem[u] -= flows[e]
        rem[v] = 0.0
        adj[u].discard(e)
        if len(adj[u]) == 1:
            leaves.append(u)
    if any(adj[v] for v in adj):
        return None
    return flows


def wasserstein1(mu, nu):
    """Exact Wasserstein-1 distance between two measures of equal mass.

    The transport linear program is solved with the HiGHS dual simplex,
    which ends on a vertex: its support is a forest. The flows are then
    recomputed from the marginals along that forest (only additions and
    subtractions) and the cost is summed with ``math.fsum``.
    """
    if len(mu) > MAX_ATOMS or len(nu) > MAX_ATOMS:
        raise ValueError(f"at most {MAX_ATOMS} atoms per measure are supported")
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    scale = max(mu.total, nu.total)
    if abs(mu.total - nu.total) > 1e-9 * scale:
        raise ValueError(f"unbalanced measures: totals {mu.total} and {nu.total}")
    ia, ib = np.flatnonzero(mu.masses > 0), np.flatnonzero(nu.masses > 0)
    if len(ia) == 0 or len(ib) == 0:
        return 0.0, TransportPlan([], 0.0)
    a = mu.masses[ia]
    b = nu.masses[ib] * (math.fsum(a) / math.fsum(nu.masses[ib]))
    C = cdist(mu.atoms[ia], nu.atoms[ib])
    n, m = C.shape
    if n == 1 or m == 1:
        support = [(i, j) for i in range(n) for j in range(m)]
        flows = (a[:, None] * np.ones((1, m)) if m == 1 else np.ones((n, 1)) * b[None, :]).ravel()
    else:
        A_eq = np.zeros((n + m, n * m))
        for i in range(n):
            A_eq[i, i * m : (i + 1) * m] = 1.0
        for j in range(m):
            A_eq[n + j, j::m] = 1.0
        res = linprog(
            C.ravel(), A_eq=A_eq[:-1], b_eq=np.concatenate([a, b])[:-1], bounds=(0, None), method="highs-ds"
        )
        if res.status != 0:
            raise ArithmeticError(f"transport solver failed: {res.message}")
        x = res.x.reshape(n, m)
        support = [tuple(map(int, ij)) for ij in np.argwhere(x > 1e-12 * scale)]
        flows = _tree_flows(support, a, b)
        if flows is None:
            flows = x[tuple(np.array(support).T)]
    cost = math.fsum(f * C[i, j] for (i, j), f in zip(support, flows))
    plan = [(int(ia[i]), int(ib[j]), float(f)) for (i, j), f in zip(support, flows) if f > 0]
    return cost, TransportPlan(plan, cost)
