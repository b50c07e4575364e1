"""Dense linear algebra helpers and a two-phase simplex solver.

Matrices are plain ``numpy.ndarray`` values of dtype float64. Everything in
here is a pure function of its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

INF = math.inf
MAX_PIVOTS = 10**6


class GramlaxError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GramlaxError, ValueError):
    """Malformed or out-of-domain input."""


class StructuralError(GramlaxError):
    """An input violates a structural property required by an operation."""


class SolverError(GramlaxError):
    """Internal failure; indicates a bug rather than bad input."""


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = 1e-10
    lp_pivot_tol: float = 1e-9
    residual_tol: float = 1e-8
    psd_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rank_tol", "lp_pivot_tol", "residual_tol", "psd_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InputError(f"{name} must be a positive finite number, got {value!r}")

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_TOL = Tolerances()


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array with at least one row and column."""
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains NaN or infinite entries")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains NaN or infinite entries")
    return a


# --------------------------------------------------------------------------
# SVD based helpers


def singular_values(m) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def _rank_threshold(sv: np.ndarray, tol: Tolerances) -> float:
    top = float(sv[0]) if sv.size else 0.0
    return tol.rank_tol * max(top, 1.0)


def numeric_rank(m, tol: Tolerances = DEFAULT_TOL) -> int:
    """Count singular values above ``rank_tol * max(sigma_max, 1)``."""
    sv = singular_values(m)
    return int(np.sum(sv > _rank_threshold(sv, tol)))


def _canonical_signs(b: np.ndarray) -> np.ndarray:
    # flip each column so its largest-magnitude entry is positive
    b = b.copy()
    for j in range(b.shape[1]):
        k = int(np.argmax(np.abs(b[:, j]) - 1e-12 * np.arange(b.shape[0])))
        if b[k, j] < 0:
            b[:, j] = -b[:, j]
    return b


def orthonormal_basis(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span of ``m``."""
    a = as_matrix(m)
    u, sv, _ = np.linalg.svd(a, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise InputError("cannot take the span of an all-zero matrix")
    r = int(np.sum(sv > _rank_threshold(sv, tol)))
    if r == 0:
        raise InputError("matrix is numerically zero; it spans no subspace")
    return _canonical_signs(u[:, :r])


def nullspace(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``{x : m @ x = 0}``; may have zero columns."""
    a = as_matrix(m)
    cols = a.shape[1]
    _, sv, vt = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(sv > _rank_threshold(sv, tol))) if sv.size else 0
    return _canonical_signs(vt[r:].T.copy()) if r < cols else np.zeros((cols, 0))


def symmetric_eigenvalues(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Ascending spectrum of a symmetric matrix."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol.residual_tol * scale:
        raise InputError(f"matrix is not symmetric (residual {asym:.3g})")
    sym = (a + a.T) / 2
    w, v = np.linalg.eigh(sym)
    recon = float(np.max(np.abs(sym - (v * w) @ v.T)))
    if recon > 1e-8 * scale:
        raise SolverError(f"eigendecomposition reconstruction residual {recon:.3g}")
    return w


# --------------------------------------------------------------------------
# Linear programming

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)

OPTIMAL, UNBOUNDED, INFEASIBLE = "optimal", "unbounded", "infeasible"


@dataclass(frozen=True)
class LpProblem:
    """minimize ``c @ x`` subject to ``A x (senses) b`` and per-variable bounds."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        nv = c.size
        a = np.array(self.A, dtype=float)
        if a.size == 0:
            a = a.reshape(0, nv)
        b = np.array(self.b, dtype=float).reshape(-1)
        if nv == 0:
            raise InputError("LP needs at least one variable")
        if a.ndim != 2 or a.shape[1] != nv:
            raise InputError(f"constraint matrix shape {a.shape} does not match {nv} variables")
        if b.size != a.shape[0]:
            raise InputError(f"rhs has {b.size} entries for {a.shape[0]} rows")
        senses = tuple(self.senses)
        if len(senses) != a.shape[0] or any(s not in _SENSES for s in senses):
            raise InputError("one sense from {'<=', '=', '>='} is required per row")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != nv:
            raise InputError(f"{len(bounds)} bounds given for {nv} variables")
        for lo, hi in bounds:
            if math.isnan(lo) or math.isnan(hi) or lo == INF or hi == -INF:
                raise InputError(f"invalid bound ({lo}, {hi})")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InputError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.c.size

    def violation(self, x) -> float:
        """Largest constraint or bound violation at ``x``."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.A.shape[0]:
            ax = self.A @ x
            for s, lhs, rhs in zip(self.senses, ax, self.b):
                if s == LE:
                    worst = max(worst, lhs - rhs)
                elif s == GE:
                    worst = max(worst, rhs - lhs)
                else:
                    worst = max(worst, abs(lhs - rhs))
        for xi, (lo, hi) in zip(x, self.bounds):
            worst = max(worst, lo - xi, xi - hi)
        return float(worst)


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    ray: np.ndarray | None = None
    infeasibility: float | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class LpBuilder:
    """Incremental LP construction with absolute-value helpers.

    Linear expressions are mappings ``{var_index: coefficient}``.
    """

    def __init__(self):
        self._cost: list[float] = []
        self._bounds: list[tuple[float, float]] = []
        self._rows: list[dict[int, float]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []

    def var(self, lo: float = 0.0, hi: float = INF, cost: float = 0.0) -> int:
        self._cost.append(float(cost))
        self._bounds.append((float(lo), float(hi)))
        return len(self._cost) - 1

    def free(self, cost: float = 0.0) -> int:
        return self.var(-INF, INF, cost)

    def split(self) -> tuple[int, int]:
        """A free quantity represented as ``pos - neg`` with both parts >= 0."""
        return self.var(), self.var()

    def row(self, expr: Mapping[int, float], sense: str, rhs: float) -> None:
        if sense not in _SENSES:
            raise InputError(f"unknown sense {sense!r}")
        self._rows.append({int(k): float(v) for k, v in expr.items() if v != 0.0})
        self._senses.append(sense)
        self._rhs.append(float(rhs))

    def abs_le(self, expr: Mapping[int, float], bound: int | float) -> None:
        """``|expr| <= bound`` where bound is a variable index or a constant."""
        pos = dict(expr)
        neg = {k: -v for k, v in expr.items()}
        if isinstance(bound, (int, np.integer)) and not isinstance(bound, bool):
            pos[int(bound)] = pos.get(int(bound), 0.0) - 1.0
            neg[int(bound)] = neg.get(int(bound), 0.0) - 1.0
            self.row(pos, LE, 0.0)
            self.row(neg, LE, 0.0)
        else:
            self.row(pos, LE, float(bound))
            self.row(neg, LE, float(bound))

    def l1_le(self, parts: Sequence[tuple[int, int]], bound: float) -> None:
        """``sum |pos - neg| <= bound`` over split quantities."""
        expr: dict[int, float] = {}
        for p, m in parts:
            expr[p] = 1.0
            expr[m] = 1.0
        self.row(expr, LE, bound)

    def build(self) -> LpProblem:
        nv = len(self._cost)
        a = np.zeros((len(self._rows), nv))
        for r, expr in enumerate(self._rows):
            for k, v in expr.items():
                a[r, k] += v
        return LpProblem(np.array(self._cost), a, np.array(self._rhs),
                         tuple(self._senses), tuple(self._bounds))

    def solve(self, tol: Tolerances = DEFAULT_TOL) -> LpSolution:
        return lp_solve(self.build(), tol)


def _to_standard_form(p: LpProblem):
    """Rewrite as ``A_s y = b_s, y >= 0`` with ``x = offset + T y``.

    Returns (A_s, b_s, c_s, row_kind, offset, T) where row_kind marks which
    columns are slacks so the caller can seed a basis.
    """
    nv = p.num_vars
    offset = np.zeros(nv)
    cols: list[np.ndarray] = []  # columns of T
    extra_rows: list[tuple[np.ndarray, float]] = []  # y-space rows "<= rhs"
    for j, (lo, hi) in enumerate(p.bounds):
        e = np.zeros(nv)
        e[j] = 1.0
        if math.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    T = np.array(cols).T
    ny = T.shape[1]

    a_y = p.A @ T if p.A.shape[0] else np.zeros((0, ny))
    b_y = p.b - (p.A @ offset if p.A.shape[0] else 0.0)
    senses = list(p.senses)
    rows = [a_y[i] for i in range(a_y.shape[0])]
    rhs = list(b_y)
    for col, ub in extra_rows:
        r = np.zeros(ny)
        r[col] = 1.0
        rows.append(r)
        rhs.append(ub)
        senses.append(LE)

    m = len(rows)
    n_slack = sum(1 for s in senses if s != EQ)
    a_s = np.zeros((m, ny + n_slack))
    b_s = np.zeros(m)
    slack_of_row = [-1] * m
    k = ny
    for i, (r, s, v) in enumerate(zip(rows, senses, rhs)):
        a_s[i, :ny] = r
        b_s[i] = v
        if s == LE:
            a_s[i, k] = 1.0
        elif s == GE:
            a_s[i, k] = -1.0
        if s != EQ:
            slack_of_row[i] = k
            k += 1
    # make rhs non-negative
    for i in range(m):
        if b_s[i] < 0:
            a_s[i] = -a_s[i]
            b_s[i] = -b_s[i]
    c_s = np.zeros(ny + n_slack)
    c_s[:ny] = p.c @ T
    return a_s, b_s, c_s, slack_of_row, offset, T


def _pivot(tab: np.ndarray, r: int, j: int) -> None:
    tab[r] /= tab[r, j]
    col = tab[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        tab[nz] -= np.outer(col[nz], tab[r])


def _bland(tab: np.ndarray, basis: list[int], allowed: int, tol: float, budget: list[int]):
    """Run Bland's rule on ``tab`` (last row reduced costs, last column rhs).

    Returns None when optimal, or the entering column index when unbounded.
    """
    m = tab.shape[0] - 1
    while True:
        red = tab[-1, :allowed]
        cand = np.nonzero(red < -tol)[0]
        if cand.size == 0:
            return None
        j = int(cand[0])
        col = tab[:m, j]
        pos = np.nonzero(col > tol)[0]
        if pos.size == 0:
            return j
        ratios = tab[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(tab, r, j)
        basis[r] = j
        budget[0] += 1
        if budget[0] > MAX_PIVOTS:
            raise SolverError("simplex exceeded the pivot cap; Bland's rule should prevent cycling")


def lp_solve(p: LpProblem, tol: Tolerances = DEFAULT_TOL) -> LpSolution:
    """Solve ``p`` by the two-phase simplex method with Bland's rule."""
    a_s, b_s, c_s, slack_of_row, offset, T = _to_standard_form(p)
    m, nc = a_s.shape
    eps = tol.lp_pivot_tol
    budget = [0]

    # phase 1: artificials on every row whose slack cannot start basic
    basis: list[int] = []
    art_rows = []
    for i in range(m):
        s = slack_of_row[i]
        if s >= 0 and a_s[i, s] == 1.0:
            basis.append(s)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_art = len(art_rows)
    tab = np.zeros((m + 1, nc + n_art + 1))
    tab[:m, :nc] = a_s
    tab[:m, -1] = b_s
    for k, i in enumerate(art_rows):
        tab[i, nc + k] = 1.0
        basis[i] = nc + k
    if n_art:
        tab[-1, nc:nc + n_art] = 1.0
        for i in art_rows:
            tab[-1] -= tab[i]
        _bland(tab, basis, nc + n_art, eps, budget)
        phase1 = -tab[-1, -1]
        if phase1 > eps * max(1.0, float(np.max(np.abs(b_s))) if m else 1.0):
            return LpSolution(INFEASIBLE, infeasibility=float(phase1), pivots=budget[0])
        # drive artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= nc:
                cands = np.nonzero(np.abs(tab[i, :nc]) > eps)[0]
                if cands.size:
                    _pivot(tab, i, int(cands[0]))
                    basis[i] = int(cands[0])
                    keep.append(i)
            else:
                keep.append(i)
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = [basis[i] for i in keep]
        row_ids = keep
        tab = np.hstack([tab[:, :nc], tab[:, -1:]])
        m = len(keep)

    else:
        row_ids = list(range(m))

    # phase 2
    tab[-1, :] = 0.0
    tab[-1, :nc] = c_s
    for i, bj in enumerate(basis):
        if c_s[bj] != 0.0:
            tab[-1] -= c_s[bj] * tab[i]
    entering = _bland(tab, basis, nc, eps, budget)
    if entering is not None:
        d = np.zeros(nc)
        d[entering] = 1.0
        for i, bj in enumerate(basis):
            d[bj] = -tab[i, entering]
        ray = T @ d[:T.shape[1]]
        return LpSolution(UNBOUNDED, ray=ray, pivots=budget[0])

    y = np.zeros(nc)
    yb = tab[:m, -1].copy()
    if m:
        # re-solve the final basis against the original rows for accuracy
        bmat = a_s[row_ids][:, basis]
        try:
            refined = np.linalg.solve(bmat, b_s[row_ids])
            if np.max(np.abs(refined - yb)) <= 1e-6 * max(1.0, float(np.max(np.abs(yb)))):
                yb = refined
        except np.linalg.LinAlgError:
            pass
    y[basis] = yb
    x = offset + T @ y[:T.shape[1]]
    return LpSolution(OPTIMAL, objective=float(p.c @ x), x=x, pivots=budget[0])
