"""Slow reference implementations used to cross-check the exact routines.

Nothing here calls the LP solver or the SVD helpers of the main modules:
planar alpha is computed by an explicit convex hull and ray casting,
subspace alignment by sampling the unit sphere of the subspace, and
positive semidefiniteness by expanding every principal minor.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .numerics import InputError

MAX_PSD_N = 8
MAX_ALIGN_K = 3


@dataclass(frozen=True)
class GridSpec:
    """Sampling density for :func:`align_brute`.

    ``samples`` points are drawn on the sphere first; ``resolution`` is the
    angular radius at which zoom refinement stops.
    """

    samples: int = 4000
    resolution: float = 1e-10

    def __post_init__(self):
        if self.samples < 3:
            raise InputError("GridSpec needs at least 3 samples")
        if not self.resolution > 0:
            raise InputError("GridSpec resolution must be positive")


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _graham_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Counter-clockwise hull vertices; collinear points on edges are dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _ray_exit(direction, hull) -> float:
    """Largest r with ``r * direction`` in the hull (which contains the origin)."""
    best = 0.0
    m = len(hull)
    dx, dy = direction
    for k in range(m):
        p, q = hull[k], hull[(k + 1) % m]
        ex, ey = q[0] - p[0], q[1] - p[1]
        # solve r * d = p + s * e
        det = dx * (-ey) - dy * (-ex)
        if det == 0.0:
            continue
        r = (p[0] * (-ey) - p[1] * (-ex)) / det
        s = (dx * p[1] - dy * p[0]) / det
        if -1e-12 <= s <= 1 + 1e-12 and r > best:
            best = r
    return best


def alpha_brute_d2(points, i: int, tol: float = 1e-12) -> float:
    """``alpha_i`` for planar vectors by hull construction and ray casting."""
    pts = [tuple(map(float, p)) for p in np.asarray(points, dtype=float)]
    n = len(pts)
    if any(len(p) != 2 for p in pts):
        raise InputError("alpha_brute_d2 needs planar vectors")
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range")
    target = pts[i]
    if math.hypot(*target) == 0.0:
        raise InputError("s_i must be nonzero")
    others = [p for j, p in enumerate(pts) if j != i and math.hypot(*p) > 0]
    if not others:
        return 0.0
    cloud = others + [(-x, -y) for x, y in others]
    hull = _graham_hull(cloud)
    if len(hull) < 3 or abs(_area(hull)) <= tol * max(math.hypot(*p) for p in hull) ** 2:
        # degenerate hull: a centred segment along the longest parallel vector
        reach = 0.0
        norm_t = math.hypot(*target)
        for p in others:
            cross = target[0] * p[1] - target[1] * p[0]
            if abs(cross) <= tol * norm_t * math.hypot(*p):
                reach = max(reach, math.hypot(*p) / norm_t)
        return reach
    return _ray_exit(target, hull)


def _area(poly) -> float:
    return 0.5 * sum(poly[k][0] * poly[(k + 1) % len(poly)][1]
                     - poly[(k + 1) % len(poly)][0] * poly[k][1] for k in range(len(poly)))


def _sphere_points(k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if k == 1:
        return np.array([[1.0]])
    if k == 2:
        t = np.linspace(0.0, math.pi, count, endpoint=False)
        return np.column_stack([np.cos(t), np.sin(t)])
    g = rng.standard_normal((count, k))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _al(a: np.ndarray, i: int) -> float:
    rest = float(np.sum(np.abs(a))) - abs(float(a[i]))
    if rest <= 0.0:
        return math.inf
    return abs(float(a[i])) / rest


def align_brute(basis, i: int, grid: GridSpec = GridSpec(), seed: int = 0) -> float:
    """Lower bound on ``Al_i(span(basis))`` from sphere sampling plus zooming.

    ``basis`` holds spanning vectors as columns; at most three are supported.
    Returns ``inf`` when a sampled vector has all mass on coordinate ``i``.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim != 2:
        raise InputError("basis must be 2-D")
    n, k = B.shape
    if k > MAX_ALIGN_K:
        raise InputError(f"align_brute supports subspaces of dimension <= {MAX_ALIGN_K}")
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range")
    if k == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    cands = _sphere_points(k, grid.samples, rng)
    # vertices of the feasible polytope sit where other coordinates vanish;
    # add those directions explicitly so the sampling cannot miss them
    if k > 1:
        for rows in itertools.combinations([j for j in range(n) if j != i], k - 1):
            _, sv, vt = np.linalg.svd(B[list(rows)])
            if sv[-1] > 1e-12 * max(1.0, sv[0]):
                cands = np.vstack([cands, vt[-1]])
    vals = np.abs(cands @ B.T)
    rest = vals.sum(axis=1) - vals[:, i]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rest > 0, vals[:, i] / rest, np.where(vals[:, i] > 0, math.inf, -1.0))
    j = int(np.argmax(ratio))
    best_val, best_c = float(ratio[j]), cands[j]
    if math.isinf(best_val) or k == 1:
        return max(best_val, 0.0)
    # zoom: random local perturbations with a shrinking radius
    radius = 0.5
    c = best_c
    while radius > grid.resolution:
        improved = False
        for _ in range(8 * k):
            trial = c + radius * rng.standard_normal(k)
            a = B @ trial
            v = _al(a, i) if np.any(a) else -1.0
            if v > best_val:
                best_val, c, improved = v, trial, True
        if not improved:
            radius *= 0.5
    return best_val


def _minor_det(m: tuple[tuple[Fraction, ...], ...]) -> Fraction:
    @lru_cache(maxsize=None)
    def det(rows: tuple[int, ...], cols: tuple[int, ...]) -> Fraction:
        if len(rows) == 1:
            return m[rows[0]][cols[0]]
        r = rows[0]
        total = Fraction(0)
        for idx, c in enumerate(cols):
            entry = m[r][c]
            if entry == 0:
                continue
            sub = det(rows[1:], cols[:idx] + cols[idx + 1:])
            total += entry * sub if idx % 2 == 0 else -entry * sub
        return total

    size = len(m)
    return det(tuple(range(size)), tuple(range(size)))


def principal_minors(M) -> dict[tuple[int, ...], float]:
    """All principal minors of a symmetric matrix with n <= 8, exactly in rationals."""
    a = np.asarray(M, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("expected a square matrix")
    n = a.shape[0]
    if n > MAX_PSD_N:
        raise InputError(f"psd_brute supports n <= {MAX_PSD_N}")
    exact = [[Fraction(float(x)) for x in row] for row in a]
    out = {}
    for size in range(1, n + 1):
        for idx in itertools.combinations(range(n), size):
            sub = tuple(tuple(exact[r][c] for c in idx) for r in idx)
            out[idx] = float(_minor_det(sub))
    return out


def psd_brute(M, threshold: float = -1e-9) -> bool:
    """True when every principal minor is at least ``threshold``."""
    return all(v >= threshold for v in principal_minors(M).values())
