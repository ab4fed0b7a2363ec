"""Distance function, projection sets and the generalised gradient.

For a point ``x`` outside ``K`` with projections ``proj_K(x)``, let
``gamma`` and ``r`` be the centre and radius of the smallest ball
enclosing ``proj_K(x)``. Then::

    grad d_K(x)  = (x - gamma) / d_K(x)
    |grad d_K(x)| = sqrt(1 - r**2 / d_K(x)**2)

``x`` is a mu-critical point when ``|grad d_K(x)| <= mu``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MedialAxisError
from .shapes import tie_slack


@dataclass(frozen=True)
class ProjectionSet:
    x: np.ndarray
    dist: float
    projections: np.ndarray
    labels: np.ndarray
    tie_slack: float

    def __len__(self):
        return len(self.projections)


@dataclass(frozen=True)
class GradientInfo:
    gamma: np.ndarray
    r: float
    grad: np.ndarray
    mu: float
    dist: float


def distance(shape, x):
    """d_K at one point (returns a float) or at each row of an array."""
    x = np.asarray(x, dtype=float)
    d = shape.distance(x)
    return float(d[0]) if x.ndim == 1 else d


def projection_set(shape, x, s_tie=None):
    """All points of ``shape`` within ``d_K(x) + s_tie`` of ``x``.

    Clouds report every site inside that radius. Analytic shapes report the
    closest point of each member, merged when closer than ``s_tie``.
    """
    x = np.asarray(x, dtype=float)
    dist = float(shape.distance(x)[0])
    s = float(tie_slack(dist)) if s_tie is None else float(s_tie)
    if s < 0:
        raise ValueError("tie slack must be nonnegative")
    pts, labels = shape.candidates(x, dist + s)
    return ProjectionSet(x=x, dist=dist, projections=pts, labels=labels, tie_slack=s)


def _circumball(S):
    # centre in the affine hull of S, equidistant from every point of S
    s0 = S[0]
    if len(S) == 1:
        return s0.copy(), 0.0
    U = S[1:] - s0
    rhs = 0.5 * np.einsum("kd,kd->k", U, U)
    lam = np.linalg.lstsq(U @ U.T, rhs, rcond=None)[0]
    c = s0 + lam @ U
    return c, float(np.max(np.einsum("kd,kd->k", S - c, S - c)))


def smallest_enclosing_ball(points):
    """Centre and radius of the minimal ball containing ``points``.

    Move-to-front variant of Welzl's algorithm: recursion depth is bounded by
    the support size ``d + 1``. Input order is used as given (no shuffling),
    so results are reproducible.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if len(P) == 0:
        raise ValueError("need at least one point")
    d = P.shape[1]
    spread = float(np.max(P.max(axis=0) - P.min(axis=0)))
    tol = 1e-13 * (spread + np.max(np.abs(P)))
    order = list(range(len(P)))

    def contains(ball, p):
        c, r2 = ball
        return r2 >= 0 and np.sqrt(np.dot(p - c, p - c)) <= np.sqrt(r2) + tol

    def mtf(end, support):
        ball = _circumball(P[support]) if support else (P[0], -1.0)
        if len(support) == d + 1:
            return ball
        for i in range(end):
            j = order[i]
            if not contains(ball, P[j]):
                ball = mtf(i, support + [j])
                order.insert(0, order.pop(i))
        return ball

    c, r2 = mtf(len(P), [])
    return c, float(np.sqrt(max(r2, 0.0)))


def gradient(shape, x, s_tie=None):
    """Generalised gradient of d_K at ``x`` (outside ``K``)."""
    ps = projection_set(shape, x, s_tie)
    if ps.dist <= 0:
        raise GeometryError("gradient undefined on K")
    return gradient_from_projections(ps.x, ps.dist, ps.projections, ps.tie_slack)


def gradient_from_projections(x, dist, projections, s_tie=0.0):
    gamma, r = smallest_enclosing_ball(projections)
    radicand = 1.0 - (r / dist) ** 2
    # witnesses may sit up to s_tie beyond dist, so r / dist <= 1 + s_tie / dist
    if radicand < -1e-9 - (2.0 + s_tie / dist) * s_tie / dist:
        raise ArithmeticError(f"enclosing radius {r} exceeds distance {dist}")
    return GradientInfo(
        gamma=gamma,
        r=r,
        grad=(x - gamma) / dist,
        mu=float(np.sqrt(min(max(radicand, 0.0), 1.0))),
        dist=dist,
    )


def project(shape, x, s_tie=None):
    """The unique projection ``p_K(x)``; raises :class:`MedialAxisError` on ties."""
    ps = projection_set(shape, x, s_tie)
    if len(ps) != 1:
        raise MedialAxisError(f"point on (numerical) medial axis: {len(ps)} projections")
    return ps.projections[0]
