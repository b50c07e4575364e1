"""Dual matrices for subspaces and certificate verification.

For a subspace ``A`` of dimension ``n - d`` whose coordinate alignments are all
finite, each row ``v_i`` of the dual matrix solves the Chebyshev program

    minimise t  subject to  v_i[i] = 1,  |v_i[j]| <= t (j != i),  B^T v_i = 0

whose optimum equals ``Al_i(A)``. The rows annihilate ``A``, so the matrix has
rank at most ``d``, unit diagonal and off-diagonal entries bounded by
``Al(A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import Subspace
from .numerics import (
    DEFAULT_TOL, EQ, INFEASIBLE, OPTIMAL, InputError, LpBuilder, SolverError,
    Tolerances, as_matrix, numeric_rank, singular_values,
)

SOURCES = ("dualized", "searched", "constructed")


class InfiniteAlignmentError(InputError):
    pass


@dataclass(frozen=True)
class OffCertificate:
    """A unit-diagonal matrix of rank at most ``d``; ``eps`` bounds |G_ij|, i != j."""

    n: int
    d: int
    G: np.ndarray
    eps: float
    rank_residual: float
    source: str = "constructed"
    annihilation: float | None = None

    def __post_init__(self):
        g = as_matrix(self.G, "G")
        if g.shape != (self.n, self.n):
            raise InputError(f"G has shape {g.shape}, expected ({self.n}, {self.n})")
        if self.d < 0:
            raise InputError("d must be non-negative")
        if self.source not in SOURCES:
            raise InputError(f"source must be one of {SOURCES}")
        g.setflags(write=False)
        object.__setattr__(self, "G", g)

    @classmethod
    def from_matrix(cls, G, d: int, source: str = "constructed",
                    annihilation: float | None = None) -> "OffCertificate":
        g = as_matrix(G, "G")
        n = g.shape[0]
        return cls(n, d, g, max_offdiag(g), rank_residual(g, d), source, annihilation)

    def residuals(self) -> dict:
        g = self.G
        return {
            "diag": float(np.max(np.abs(np.diag(g) - 1.0))),
            "offdiag": float(max(0.0, max_offdiag(g) - self.eps)),
            "rank": float(self.rank_residual),
            "annihilation": None if self.annihilation is None else float(self.annihilation),
        }

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "eps": float(self.eps),
            "G": [[float(x) for x in row] for row in self.G],
            "source": self.source,
            "residuals": self.residuals(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OffCertificate":
        try:
            n, d, G = int(data["n"]), int(data["d"]), data["G"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"certificate is missing a required field: {exc}") from None
        g = as_matrix(G, "G")
        eps = float(data["eps"]) if "eps" in data else max_offdiag(g)
        ann = (data.get("residuals") or {}).get("annihilation")
        return cls(n, d, g, eps, rank_residual(g, d), data.get("source", "constructed"),
                   None if ann is None else float(ann))


@dataclass(frozen=True)
class ThetaCertificate:
    """An off-certificate that is also a Gram matrix ``G = U^T U`` of unit vectors."""

    off: OffCertificate
    min_eigenvalue: float
    U: np.ndarray

    @classmethod
    def from_off(cls, off: OffCertificate) -> "ThetaCertificate":
        """Factor the symmetric part of ``off.G`` through its top ``d`` eigenpairs."""
        sym = (off.G + off.G.T) / 2
        w, v = np.linalg.eigh(sym)
        d = max(1, min(off.d, off.n))
        top = np.argsort(w)[::-1][:d]
        U = (v[:, top] * np.sqrt(np.clip(w[top], 0.0, None))).T
        return cls(off, float(w[0]), U)

    def to_dict(self) -> dict:
        out = self.off.to_dict()
        out["min_eigenvalue"] = self.min_eigenvalue
        out["U"] = [[float(x) for x in row] for row in self.U]
        return out


@dataclass
class Check:
    name: str
    residual: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"check": self.name, "residual": self.residual,
                "threshold": self.threshold, "passed": self.passed}


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def add(self, name: str, residual: float, threshold: float) -> None:
        self.checks.append(Check(name, float(residual), float(threshold), bool(residual <= threshold)))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def max_offdiag(g: np.ndarray) -> float:
    if g.shape[0] < 2:
        return 0.0
    off = np.abs(g - np.diag(np.diag(g)))
    return float(off.max())


def rank_residual(g: np.ndarray, d: int) -> float:
    """The (d+1)-th singular value; zero when d >= n."""
    sv = singular_values(g)
    return float(sv[d]) if d < sv.size else 0.0


def dual_row(A: Subspace, i: int, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, float]:
    """Row ``v`` with ``v[i] = 1``, ``v`` orthogonal to ``A`` and minimal sup-norm off ``i``."""
    n, k = A.n, A.k
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range for dimension {n}")
    B = A.basis
    lp = LpBuilder()
    t = lp.var(0.0, cost=1.0)
    v = {j: lp.free() for j in range(n) if j != i}
    for j, var in v.items():
        lp.abs_le({var: 1.0}, t)
    for q in range(k):
        lp.row({var: B[j, q] for j, var in v.items()}, EQ, -B[i, q])
    sol = lp.solve(tol)
    if sol.status == INFEASIBLE:
        raise InfiniteAlignmentError(f"index {i} has infinite alignment")
    if sol.status != OPTIMAL:
        raise SolverError(f"dual row LP reported {sol.status}")
    row = np.zeros(n)
    row[i] = 1.0
    for j, var in v.items():
        row[j] = sol.x[var]
    return row, float(sol.x[t])


def dualize(A: Subspace, tol: Tolerances = DEFAULT_TOL) -> OffCertificate:
    """Assemble the dual matrix of ``A`` row by row and check its properties."""
    n, k = A.n, A.k
    rows, ts = [], []
    for i in range(n):
        row, t = dual_row(A, i, tol)
        rows.append(row)
        ts.append(t)
    G = np.array(rows)
    d = n - k
    ann = float(np.max(np.abs(G @ A.basis))) if k else 0.0
    if ann > tol.residual_tol * max(1.0, float(np.max(np.abs(G)))):
        raise SolverError(f"dual matrix does not annihilate the subspace (residual {ann:.3g})")
    cert = OffCertificate(n, d, G, max_offdiag(G), rank_residual(G, d), "dualized", ann)
    if numeric_rank(G, tol) > d:
        raise SolverError(f"dual matrix has numeric rank above {d}")
    if n > 1 and abs(cert.eps - max(ts)) > tol.residual_tol:
        raise SolverError("largest off-diagonal entry differs from the largest row optimum")
    return cert


def verify_off_certificate(c: OffCertificate, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    g = c.G
    report = VerificationReport()
    report.add("unit diagonal", float(np.max(np.abs(np.diag(g) - 1.0))), tol.residual_tol)
    report.add("off-diagonal bound", max(0.0, max_offdiag(g) - c.eps), tol.residual_tol)
    sv = singular_values(g)
    thresh = tol.rank_tol * max(float(sv[0]), 1.0)
    report.add("rank", rank_residual(g, c.d), thresh)
    return report


def verify_theta_certificate(c: ThetaCertificate, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    report = verify_off_certificate(c.off, tol)
    g = c.off.G
    scale = max(1.0, float(np.max(np.abs(g))))
    report.add("symmetry", float(np.max(np.abs(g - g.T))), tol.residual_tol * scale)
    sym = (g + g.T) / 2
    lam_min = float(np.linalg.eigvalsh(sym)[0])
    trace = float(np.trace(sym))
    report.add("psd", max(0.0, -lam_min), tol.psd_tol * max(trace, 1.0))
    U = np.asarray(c.U, dtype=float)
    if U.shape[1] != c.off.n:
        report.add("gram factorization", math.inf, tol.residual_tol)
    else:
        report.add("gram factorization", float(np.max(np.abs(g - U.T @ U))), tol.residual_tol * scale)
        report.add("unit columns", float(np.max(np.abs(np.linalg.norm(U, axis=0) - 1.0))), tol.residual_tol)
        report.add("dimension", max(0, U.shape[0] - c.off.d), 0)
    return report
