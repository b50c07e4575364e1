"""Coordinate alignment of vectors and subspaces.

``Al_i(a) = |a_i| / sum_{j != i} |a_j|`` measures how much of ``a`` sits in
coordinate ``i``. The alignment of a subspace is the largest value over its
nonzero vectors; it is computed exactly with one small LP per coordinate.

Indices are 0-based throughout the library.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_TOL, EQ, OPTIMAL, UNBOUNDED, InputError, LpBuilder, SolverError,
    Tolerances, as_matrix, as_vector, orthonormal_basis,
)

INFINITE = math.inf


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n stored through an orthonormal basis (columns).

    ``k == 0`` is allowed and represents the zero subspace.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] < 1:
            raise InputError(f"basis must be an n x k array, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise InputError("basis contains NaN or infinite entries")
        if b.shape[1] > b.shape[0]:
            raise InputError("basis has more columns than the ambient dimension")
        if b.shape[1] and np.max(np.abs(b.T @ b - np.eye(b.shape[1]))) > 1e-8:
            raise InputError("basis columns are not orthonormal; use Subspace.span")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        """Subspace spanned by the columns of ``vectors`` (n x m)."""
        m = as_matrix(vectors, "spanning set")
        return cls(orthonormal_basis(m, tol))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)))

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def project(self, v) -> np.ndarray:
        v = as_vector(v)
        return self.basis @ (self.basis.T @ v)

    def distance(self, v) -> float:
        """Sup-norm distance from ``v`` to its projection onto the subspace."""
        v = as_vector(v)
        return float(np.max(np.abs(v - self.project(v))))


@dataclass(frozen=True)
class AlignmentCertificate:
    index: int
    value: float
    witness: np.ndarray

    def to_dict(self, one_based: bool = True) -> dict:
        return {
            "index": self.index + (1 if one_based else 0),
            "value": ext_real_json(self.value),
            "witness": [float(x) for x in self.witness],
        }


def ext_real_json(x: float):
    """JSON form of a value in [0, inf]: finite floats stay numbers."""
    return "inf" if math.isinf(x) else float(x)


def ext_real_from_json(x) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "+inf"):
            return INFINITE
        raise InputError(f"unrecognised extended real {x!r}")
    value = float(x)
    if value < 0 or math.isnan(value):
        raise InputError(f"alignment values must be non-negative, got {x!r}")
    return value


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range for dimension {n}")


def align_index_vector(a, i: int) -> float:
    """``|a_i| / sum_{j != i} |a_j|``; infinite when the denominator vanishes."""
    a = as_vector(a)
    _check_index(i, a.size)
    if not np.any(a):
        raise InputError("alignment of the zero vector is undefined")
    rest = float(np.sum(np.abs(np.delete(a, i))))
    if rest == 0.0:
        return INFINITE
    return abs(float(a[i])) / rest


def _unit_max(v: np.ndarray) -> np.ndarray:
    m = float(np.max(np.abs(v)))
    return v / m if m > 0 else v


def align_index_subspace(A: Subspace, i: int, tol: Tolerances = DEFAULT_TOL) -> AlignmentCertificate:
    """Largest ``Al_i`` over nonzero vectors of ``A``, with a maximising witness.

    Solved as: maximise ``(Bc)_i`` subject to ``sum_{j != i} |(Bc)_j| <= 1``.
    The LP is unbounded exactly when ``e_i`` lies in ``A``.
    """
    n, k = A.n, A.k
    _check_index(i, n)
    B = A.basis
    if k == 0:
        return AlignmentCertificate(i, 0.0, np.zeros(n))

    lp = LpBuilder()
    c = [lp.free(cost=-B[i, q]) for q in range(k)]
    parts = []
    for j in range(n):
        if j == i:
            continue
        pos, neg = lp.split()
        parts.append((pos, neg))
        expr = {c[q]: B[j, q] for q in range(k)}
        expr[pos] = -1.0
        expr[neg] = 1.0
        lp.row(expr, EQ, 0.0)
    lp.l1_le(parts, 1.0)
    sol = lp.solve(tol)

    if sol.status == UNBOUNDED:
        w = B @ sol.ray[: k]
        if w[i] < 0:
            w = -w
        return AlignmentCertificate(i, INFINITE, _unit_max(w))
    if sol.status != OPTIMAL:
        raise SolverError(f"alignment LP reported {sol.status}; zero is always feasible")

    value = max(0.0, -sol.objective)
    w = B @ sol.x[:k]
    if value <= tol.lp_pivot_tol or not np.any(np.abs(np.delete(w, i)) > 0):
        # every vector of A vanishes at i (or the optimum is degenerate);
        # any basis vector is a maximiser
        col = int(np.argmax(np.max(np.abs(np.delete(B, i, axis=0)), axis=0)))
        w = B[:, col].copy()
        value = align_index_vector(w, i)
    if w[i] < 0:
        w = -w
    return AlignmentCertificate(i, value, _unit_max(w))


def align_subspace(A: Subspace, tol: Tolerances = DEFAULT_TOL) -> tuple[float, list[AlignmentCertificate]]:
    """``Al(A) = max_i Al_i(A)`` together with every per-index certificate."""
    certs = [align_index_subspace(A, i, tol) for i in range(A.n)]
    return max(c.value for c in certs), certs


def sl_from_align(n: int, align: float) -> float:
    """Convert a minimum alignment into the SL value: ``(1 + 1/align) / n``."""
    if n < 1:
        raise InputError("n must be positive")
    if not align > 0:
        raise InputError(f"alignment must be positive, got {align!r}")
    if math.isinf(align):
        return 1.0 / n
    return (1.0 + 1.0 / align) / n


def off_from_sl(n: int, sl: float) -> float:
    """``1 / (n * sl - 1)``; inverse of :func:`sl_from_align` in the alignment."""
    if not n * sl > 1:
        raise InputError(f"need n * sl > 1, got n={n}, sl={sl!r}")
    return 1.0 / (n * sl - 1.0)


def script_l_uniform(X, tol: Tolerances = DEFAULT_TOL) -> float:
    """L-value of the uniform distribution over the vectors of ``X``.

    ``X`` is a point configuration (or an n x k array whose rows are the
    vectors); they must be nonzero and span R^k.
    """
    pts = as_matrix(getattr(X, "points", X), "vectors")
    n, k = pts.shape
    if np.any(np.linalg.norm(pts, axis=1) == 0):
        raise InputError("configurations may not contain the zero vector")
    basis = orthonormal_basis(pts, tol)
    if basis.shape[1] != k:
        raise InputError(f"the {n} vectors span a {basis.shape[1]}-dimensional space, not R^{k}")
    value, _ = align_subspace(Subspace(basis), tol)
    return sl_from_align(n, value)
