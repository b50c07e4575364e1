"""Finite vector configurations and the fractions alpha_i(S).

``alpha_i(S)`` is the largest ``r`` such that ``r * s_i`` is a combination
``sum_{j != i} lam_j s_j`` with ``sum |lam_j| <= 1``; equivalently the part of
``s_i`` inside the symmetric hull of the other vectors.

Planar helpers assume the antipodal cyclic convention: after
:func:`normalize_antipodal` the predecessor of ``w_0`` is ``-w_{n-1}`` and the
successor of ``w_{n-1}`` is ``-w_0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import Subspace
from .numerics import (
    DEFAULT_TOL, EQ, OPTIMAL, InputError, LpBuilder, SolverError, StructuralError,
    Tolerances, as_matrix, nullspace,
)

ANGLE_TOL = 1e-12
STRUCTURAL_ZERO = 1e-12


@dataclass(frozen=True)
class PointConfig:
    """``n`` nonzero vectors in R^d, stored as the rows of ``points``."""

    points: np.ndarray

    def __post_init__(self):
        p = as_matrix(self.points, "points")
        if np.any(np.linalg.norm(p, axis=1) == 0.0):
            raise InputError("point configurations may not contain the zero vector")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def angles(self) -> np.ndarray | None:
        """Directions in [0, 2pi) for planar configurations, else None."""
        if self.d != 2:
            return None
        return np.mod(np.arctan2(self.points[:, 1], self.points[:, 0]), 2 * math.pi)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    @classmethod
    def from_polar(cls, angles, lengths=None) -> "PointConfig":
        angles = np.asarray(angles, dtype=float)
        lengths = np.ones_like(angles) if lengths is None else np.asarray(lengths, dtype=float)
        return cls(np.column_stack([lengths * np.cos(angles), lengths * np.sin(angles)]))

    def to_dict(self) -> dict:
        return {"d": self.d, "points": [[float(x) for x in row] for row in self.points]}


@dataclass(frozen=True)
class AlphaCertificate:
    """``value * s_i == sum_j lam[j] s_j`` with ``lam[i] == 0``, ``sum |lam| <= 1``."""

    index: int
    value: float
    lam: np.ndarray

    def to_dict(self, one_based: bool = True) -> dict:
        return {
            "index": self.index + (1 if one_based else 0),
            "value": float(self.value),
            "lambda": [float(x) for x in self.lam],
        }


def alpha_index(S: PointConfig, i: int, tol: Tolerances = DEFAULT_TOL) -> AlphaCertificate:
    n, d = S.n, S.d
    if n < 2:
        raise InputError("alpha needs at least two vectors")
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range for {n} vectors")
    pts = S.points

    lp = LpBuilder()
    r = lp.var(0.0, cost=-1.0)
    parts = {}
    for j in range(n):
        if j != i:
            parts[j] = lp.split()
    for row in range(d):
        expr = {r: pts[i, row]}
        for j, (pos, neg) in parts.items():
            expr[pos] = -pts[j, row]
            expr[neg] = pts[j, row]
        lp.row(expr, EQ, 0.0)
    lp.l1_le(list(parts.values()), 1.0)
    sol = lp.solve(tol)
    if sol.status != OPTIMAL:
        raise SolverError(f"alpha LP reported {sol.status}; the hull is bounded and contains 0")

    lam = np.zeros(n)
    for j, (pos, neg) in parts.items():
        lam[j] = sol.x[pos] - sol.x[neg]
    lam[np.abs(lam) < STRUCTURAL_ZERO] = 0.0
    return AlphaCertificate(i, float(sol.x[r]), lam)


def alpha_all(S: PointConfig, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    values = np.array([alpha_index(S, i, tol).value for i in range(S.n)])
    return values, float(values.max())


def normalize_antipodal(S: PointConfig) -> PointConfig:
    """Flip vectors into the upper half-plane and sort them by angle."""
    if S.d != 2:
        raise InputError("antipodal normalisation is defined for planar configurations only")
    ang = S.angles
    flip = ang >= math.pi
    pts = np.where(flip[:, None], -S.points, S.points)
    ang = np.where(flip, ang - math.pi, ang)
    # -0.0 rounding can leave an angle at pi after subtraction
    ang = np.where(ang >= math.pi, 0.0, ang)
    order = np.argsort(ang, kind="stable")
    return PointConfig(pts[order])


def _is_normalized(S: PointConfig) -> bool:
    ang = S.angles
    return bool(np.all(ang < math.pi) and np.all(np.diff(ang) >= 0))


def antipodal_cycle(S: PointConfig) -> np.ndarray:
    """The 2n vertices ``w_0..w_{n-1}, -w_0..-w_{n-1}`` in order."""
    return np.vstack([S.points, -S.points])


def is_strictly_convex_antipodal(S: PointConfig, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True when ``w_1..w_n, -w_1..-w_n`` are the vertices of a strictly convex polygon.

    ``S`` must already be normalised. Directions closer than 1e-12 rad count as
    parallel.
    """
    if S.d != 2 or S.n < 2 or not _is_normalized(S):
        return False
    ang = S.angles
    gaps = np.append(np.diff(ang), ang[0] + math.pi - ang[-1])
    if np.any(gaps <= ANGLE_TOL):
        return False
    poly = antipodal_cycle(S)
    e1 = poly - np.roll(poly, 1, axis=0)
    e2 = np.roll(poly, -1, axis=0) - poly
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    return bool(np.all(cross > 1e-14 * scale))


def nullspace_of_config(S: PointConfig, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """All ``a`` with ``sum_i a_i s_i = 0``."""
    return Subspace(nullspace(S.points.T, tol))


def neighbor_coefficients(S: PointConfig) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``w_i = mu_prev * prev_i + mu_next * next_i`` for every i.

    ``prev_i``/``next_i`` are the cyclic antipodal neighbours. Raises
    StructuralError when a neighbour pair is parallel.
    """
    if S.d != 2:
        raise InputError("neighbour coefficients need a planar configuration")
    n = S.n
    if n < 3:
        raise InputError("neighbour coefficients need at least three vectors")
    w = S.points
    mu_prev = np.empty(n)
    mu_next = np.empty(n)
    for i in range(n):
        prev = w[i - 1] if i > 0 else -w[n - 1]
        nxt = w[i + 1] if i < n - 1 else -w[0]
        det = prev[0] * nxt[1] - prev[1] * nxt[0]
        if abs(det) <= 1e-14 * np.linalg.norm(prev) * np.linalg.norm(nxt):
            raise StructuralError(f"neighbours of vector {i} are parallel")
        mu_prev[i] = (w[i, 0] * nxt[1] - w[i, 1] * nxt[0]) / det
        mu_next[i] = (prev[0] * w[i, 1] - prev[1] * w[i, 0]) / det
    return mu_prev, mu_next


def neighbor_alphas(S: PointConfig) -> np.ndarray:
    """Closed-form alpha values for strictly convex antipodal configurations."""
    mu_prev, mu_next = neighbor_coefficients(S)
    return 1.0 / (mu_prev + mu_next)


def random_strictly_convex(n: int, rng: np.random.Generator, jitter: float = 0.25,
                           min_gap: float = 1e-3) -> PointConfig:
    """Random normalised strictly convex antipodal configuration.

    Angles are sorted uniforms on [0, pi); lengths are ``1 + jitter * U(-1, 1)``
    with rejection until the polygon is strictly convex.
    """
    if n < 2:
        raise InputError("need at least two vectors")
    for attempt in range(10_000):
        ang = np.sort(rng.uniform(0.0, math.pi, n))
        ang -= ang[0]
        gaps = np.append(np.diff(ang), math.pi - ang[-1])
        if np.min(gaps) < min_gap:
            continue
        scale = jitter * (0.5 ** (attempt // 100))
        lengths = 1.0 + scale * rng.uniform(-1.0, 1.0, n)
        S = PointConfig.from_polar(ang, lengths)
        if is_strictly_convex_antipodal(S):
            return S
    raise SolverError("could not sample a strictly convex configuration")


def hull_vertices(S: PointConfig, i: int) -> np.ndarray:
    """Vertices of the symmetric hull of ``{+-s_j : j != i}`` (planar), counter-clockwise."""
    if S.d != 2:
        raise InputError("hull vertices are only available for planar configurations")
    others = np.delete(S.points, i, axis=0)
    pts = np.vstack([others, -others])
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(pts)
    except QhullError:
        # all points collinear: the hull is a centred segment
        far = pts[np.argmax(np.linalg.norm(pts, axis=1))]
        return np.array([far, -far])
    return pts[hull.vertices]
