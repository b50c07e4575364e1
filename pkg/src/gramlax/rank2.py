"""Rank-2 symmetrisation: from a locally optimal planar configuration to a Gram matrix.

Pipeline objects for a normalised, strictly convex antipodal configuration
``w_0..w_{n-1}``:

* ``P``  -- column ``i`` is the unique dependency ``w_i - mu_prev w_{i-1} - mu_next w_{i+1}``
  (cyclic, with the sign flip across the antipode), so ``P`` is tridiagonal
  plus two corners.
* ``lam`` -- positive weights making ``P @ diag(lam)`` symmetric.
* ``Q``  -- dual matrix of the dependency space, oriented so ``Q.T @ P == 0``.
* ``Q'`` -- ``(Q + Q.T) / 2``, which must come out positive semidefinite of rank 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .alignment import Subspace
from .duality import dualize
from .geometry import PointConfig, is_strictly_convex_antipodal, neighbor_coefficients
from .numerics import (
    DEFAULT_TOL, EQ, OPTIMAL, GramlaxError, InputError, LpBuilder, StructuralError,
    Tolerances, numeric_rank, symmetric_eigenvalues,
)


class PipelineError(GramlaxError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PStruct:
    """Dependency matrix with ``a[i] = P[i, i+1]``, ``b[i] = P[i+1, i]`` (indices mod n)."""

    n: int
    P: np.ndarray
    a: np.ndarray
    b: np.ndarray
    eps_per_index: np.ndarray

    @property
    def support_residual(self) -> float:
        return float(np.max(np.abs(self.P * ~_pattern(self.n)), initial=0.0))


@dataclass
class Rank2Report:
    n: int
    eps: float
    config: PointConfig | None
    P: PStruct
    lam: np.ndarray
    Q: np.ndarray
    Q_prime: np.ndarray
    residuals: dict
    pl_rank: int
    q_prime_rank: int
    eigenvalues: np.ndarray
    psd: bool
    breaches: list[str] = field(default_factory=list)

    @property
    def closed_form_gap(self) -> float:
        return abs(self.eps - math.cos(math.pi / self.n))

    def to_dict(self) -> dict:
        def mat(m):
            return [[float(x) for x in row] for row in m]

        return {
            "n": self.n,
            "eps": float(self.eps),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "pl_rank": self.pl_rank,
            "q_prime_rank": self.q_prime_rank,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "psd": self.psd,
            "breaches": list(self.breaches),
            "eps_per_index": [float(x) for x in self.P.eps_per_index],
            "lambda": [float(x) for x in self.lam],
            "config": None if self.config is None else mat(self.config.points),
            "P": mat(self.P.P),
            "Q": mat(self.Q),
            "Q_prime": mat(self.Q_prime),
        }


def _pattern(n: int) -> np.ndarray:
    idx = np.arange(n)
    mask = np.zeros((n, n), dtype=bool)
    mask[idx, idx] = True
    mask[idx, (idx + 1) % n] = True
    mask[(idx + 1) % n, idx] = True
    return mask


def optimal_config(n: int) -> PointConfig:
    """Unit vectors at angles ``k * pi / n``, k = 0..n-1."""
    if n < 2:
        raise InputError("optimal_config needs n >= 2")
    return PointConfig.from_polar(np.arange(n) * math.pi / n)


def p_matrix(S: PointConfig, tol: Tolerances = DEFAULT_TOL) -> PStruct:
    if S.d != 2:
        raise InputError("p_matrix needs a planar configuration")
    if S.n < 3:
        raise InputError("p_matrix needs at least three vectors")
    if not is_strictly_convex_antipodal(S, tol):
        raise StructuralError("configuration is not normalised and strictly convex antipodal")
    n = S.n
    mu_prev, mu_next = neighbor_coefficients(S)
    P = np.eye(n)
    for i in range(n):
        # predecessor of w_0 is -w_{n-1}; successor of w_{n-1} is -w_0
        P[(i - 1) % n, i] = mu_prev[i] if i == 0 else -mu_prev[i]
        P[(i + 1) % n, i] = mu_next[i] if i == n - 1 else -mu_next[i]
    idx = np.arange(n)
    a = P[idx, (idx + 1) % n].copy()
    b = P[(idx + 1) % n, idx].copy()
    ps = PStruct(n, P, a, b, 1.0 / (mu_prev + mu_next))
    if not (np.all(a[:-1] < 0) and np.all(b[:-1] < 0) and a[-1] > 0 and b[-1] > 0):
        raise StructuralError("dependency matrix violates the sign pattern")
    if ps.support_residual > 1e-8:
        raise StructuralError("dependency matrix has entries outside the cyclic band")
    return ps


def propagate_lambda(P: PStruct) -> tuple[np.ndarray, float]:
    """Weights with ``P[i, i+1] lam[i+1] == P[i+1, i] lam[i]`` along the path; returns closure residual."""
    n = P.n
    lam = np.ones(n)
    for i in range(n - 1):
        lam[i + 1] = lam[i] * P.b[i] / P.a[i]
    # closing pair (n-1, 0): a[n-1] lam[0] == b[n-1] lam[n-1]
    lhs, rhs = P.a[-1] * lam[0], P.b[-1] * lam[-1]
    closure = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    return lam / lam.min(), float(closure)


def positive_kernel_weights(ms, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Weights ``lam >= 1`` with ``sum lam_i m_i == 0``, minimising ``sum lam``."""
    mats = [np.atleast_1d(np.asarray(m, dtype=float)).reshape(-1) for m in ms]
    if not mats:
        raise InputError("need at least one matrix")
    size = mats[0].size
    if any(m.size != size for m in mats):
        raise InputError("all matrices must have the same shape")
    lp = LpBuilder()
    lam = [lp.var(1.0, cost=1.0) for _ in mats]
    for r in range(size):
        expr = {lam[k]: mats[k][r] for k in range(len(mats))}
        if any(expr.values()):
            lp.row(expr, EQ, 0.0)
    sol = lp.solve(tol)
    if sol.status != OPTIMAL:
        raise StructuralError(f"no positive combination vanishes ({sol.status})")
    return np.array([sol.x[v] for v in lam])


def symmetry_generators(P: PStruct) -> list[np.ndarray]:
    """``m_k = p_k e_k^T - e_k p_k^T`` so that ``sum lam_k m_k = PL - (PL)^T``."""
    out = []
    for k in range(P.n):
        m = np.zeros((P.n, P.n))
        m[:, k] += P.P[:, k]
        m[k, :] -= P.P[:, k]
        out.append(m)
    return out


def lambda_matrix(P: PStruct, tol: Tolerances = DEFAULT_TOL, Q: np.ndarray | None = None) -> np.ndarray:
    """Positive weights making ``P @ diag(lam)`` symmetric, normalised to ``min(lam) == 1``.

    Falls back to a positive-kernel LP (on ``q_i p_i^T`` when ``Q`` is given,
    otherwise on the symmetry generators) if propagation does not close.
    """
    lam, closure = propagate_lambda(P)
    if closure <= tol.residual_tol:
        return lam
    ms = [np.outer(Q[:, i], P.P[:, i]) for i in range(P.n)] if Q is not None else symmetry_generators(P)
    try:
        lam = positive_kernel_weights(ms, tol)
    except StructuralError:
        raise StructuralError(
            f"no positive Lambda (input not optimal); cycle closure residual {closure:.3g}"
        ) from None
    return lam / lam.min()


def q_from_config(S: PointConfig, tol: Tolerances = DEFAULT_TOL, P: PStruct | None = None) -> np.ndarray:
    """Dual matrix of the dependency space, transposed so that ``Q.T @ P == 0``."""
    if S.n <= 2:
        raise InputError("q_from_config needs n > 2")
    if P is None:
        P = p_matrix(S, tol)
    Q = dualize(geometry.nullspace_of_config(S, tol), tol).G.T.copy()
    mask = _pattern(S.n) & ~np.eye(S.n, dtype=bool)
    rows, cols = np.nonzero(mask)
    for i, j in zip(rows, cols):
        if np.sign(Q[i, j]) != -np.sign(P.P[i, j]):
            raise StructuralError(f"Q[{i},{j}] has the wrong sign")
        if abs(abs(Q[i, j]) - P.eps_per_index[j]) > tol.residual_tol:
            raise StructuralError(f"|Q[{i},{j}]| differs from eps_{j}")
    return Q


def symmetrize(Q, P: PStruct, lam, tol: Tolerances = DEFAULT_TOL,
               config: PointConfig | None = None) -> Rank2Report:
    Q = np.asarray(Q, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = P.n
    if Q.shape != (n, n) or lam.shape != (n,):
        raise InputError("Q, P and lambda dimensions disagree")
    S = P.P * lam[None, :]
    _, closure = propagate_lambda(P)
    residuals = {
        "p_support": P.support_residual,
        "lambda_cycle": closure,
        "pl_symmetry": float(np.max(np.abs(S - S.T))),
        "annihilation": float(max(np.max(np.abs(Q.T @ S)), np.max(np.abs(S @ Q.T)))),
    }
    Qp = (Q + Q.T) / 2
    eig = symmetric_eigenvalues(Qp, tol)
    trace = float(np.trace(Qp))
    residuals["trace"] = abs(trace - n)
    scale = max(1.0, float(np.max(np.abs(S))))
    breaches = [name for name in ("p_support", "lambda_cycle", "pl_symmetry", "annihilation", "trace")
                if residuals[name] > tol.residual_tol * scale]
    return Rank2Report(
        n=n,
        eps=float(np.max(P.eps_per_index)),
        config=config,
        P=P,
        lam=lam,
        Q=Q,
        Q_prime=Qp,
        residuals=residuals,
        pl_rank=numeric_rank(S, tol),
        q_prime_rank=numeric_rank(Qp, tol),
        eigenvalues=eig,
        psd=bool(eig[0] >= -tol.psd_tol * max(trace, 1.0)),
        breaches=breaches,
    )


def rank2_pipeline(n: int, tol: Tolerances = DEFAULT_TOL) -> Rank2Report:
    if n < 3:
        raise InputError("rank2_pipeline needs n >= 3")
    stages = {}

    def run(stage, fn, *args, **kwargs):
        try:
            stages[stage] = fn(*args, **kwargs)
        except GramlaxError as exc:
            raise PipelineError(stage, exc) from exc
        return stages[stage]

    S = run("optimal_config", optimal_config, n)
    P = run("p_matrix", p_matrix, S, tol)
    Q = run("q_from_config", q_from_config, S, tol, P)
    lam = run("lambda_matrix", lambda_matrix, P, tol, Q)
    return run("symmetrize", symmetrize, Q, P, lam, tol, S)


def cycle_products(P: PStruct, lam) -> tuple[float, float]:
    """``(prod |c_i|, prod |d_i|)`` for ``c_i = (PL)[i, i+1]``, ``d_i = (PL)[i+1, i]``."""
    lam = np.asarray(lam, dtype=float)
    n = P.n
    idx = np.arange(n)
    c = P.a * lam[(idx + 1) % n]
    d = P.b * lam
    return float(np.prod(np.abs(c))), float(np.prod(np.abs(d)))


def cycle_angle_residual(S: PointConfig, P: PStruct, lam) -> float:
    """Largest relative error in ``|d_i|/|c_{i-1}| = |w_{i-1}| sin phi_{i-1} / (|w_{i+1}| sin phi_i)``."""
    lam = np.asarray(lam, dtype=float)
    n = P.n
    idx = np.arange(n)
    c = P.a * lam[(idx + 1) % n]
    d = P.b * lam
    ang = S.angles
    phi = np.append(np.diff(ang), ang[0] + math.pi - ang[-1])
    r = S.lengths
    worst = 0.0
    for i in range(n):
        lhs = abs(d[i]) / abs(c[(i - 1) % n])
        rhs = r[(i - 1) % n] * math.sin(phi[(i - 1) % n]) / (r[(i + 1) % n] * math.sin(phi[i]))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst
