"""Searches for configurations with small maximal alpha, plus closed-form bounds.

Planar search works on angles only: for fixed directions the best lengths
make every alpha equal, and that common value is ``1 / rho(M)`` where ``M``
is the nonnegative cyclic neighbour matrix below and ``rho`` its Perron root.
General dimensions use a stochastic local search over subspaces and only
ever report upper bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import Subspace, align_index_subspace, align_index_vector, align_subspace
from .duality import InfiniteAlignmentError, OffCertificate, dual_row, dualize
from .geometry import (
    PointConfig, is_strictly_convex_antipodal, neighbor_alphas, normalize_antipodal,
    nullspace_of_config,
)
from .numerics import (
    DEFAULT_TOL, LE, OPTIMAL, InputError, LpBuilder, StructuralError, Tolerances,
    nullspace, orthonormal_basis,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchConfig:
    n: int
    d: int
    restarts: int = 20
    max_iters: int = 200
    step: float = 0.1
    shrink: float = 0.5
    seed: int = 0
    temperature: float = 1e-3
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        if self.restarts < 1:
            raise InputError("restarts must be at least 1")
        if not 0 < self.step < 1:
            raise InputError("step must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise InputError("shrink must lie in (0, 1)")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")

    def rng(self, restart: int) -> np.random.Generator:
        return np.random.default_rng(self.seed ^ restart)


@dataclass
class SearchResult:
    certificate: OffCertificate
    config: PointConfig | Subspace
    history: list[float]
    iterations: int
    converged: bool
    restart: int = 0
    best_so_far: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        if isinstance(self.config, PointConfig):
            cfg = {"kind": "points", **self.config.to_dict()}
        else:
            cfg = {"kind": "subspace", "n": self.config.n,
                   "basis": [[float(x) for x in col] for col in self.config.basis.T]}
        return {
            "n": self.certificate.n,
            "d": self.certificate.d,
            "eps": float(self.certificate.eps),
            "upper_bound_only": True,
            "converged": self.converged,
            "iterations": self.iterations,
            "restart": self.restart,
            "certificate": self.certificate.to_dict(),
            "config": cfg,
            "history": [float(x) for x in self.history],
        }

    def history_csv(self) -> str:
        lines = ["iteration,max_alpha"]
        lines += [f"{k},{v!r}" for k, v in enumerate(self.history)]
        return "\n".join(lines) + "\n"


def welch_bound(n: int, d: int) -> float:
    """``sqrt((n - d) / (d (n - 1)))``."""
    if not (n > d >= 1):
        raise InputError(f"the Welch bound needs n > d >= 1, got n={n}, d={d}")
    return math.sqrt((n - d) / (d * (n - 1)))


def theta_d2_exact(n: int) -> tuple[float, PointConfig]:
    """``cos(pi / n)`` and the lines at angles ``k pi / n`` that attain it."""
    if n < 2:
        raise InputError("need n >= 2")
    lines = PointConfig.from_polar(np.arange(n) * math.pi / n)
    return math.cos(math.pi / n), lines


# --------------------------------------------------------------------------
# planar search


def _gaps(angles: np.ndarray) -> np.ndarray:
    return np.append(np.diff(angles), angles[0] + math.pi - angles[-1])


def neighbor_matrix(angles: np.ndarray) -> np.ndarray:
    """Cyclic nonnegative matrix whose Perron root is ``1 / (equalised alpha)``.

    With inverse lengths ``y``, ``1 / alpha_i = (M y)_i / y_i``.
    """
    n = angles.size
    phi = _gaps(angles)
    M = np.zeros((n, n))
    for i in range(n):
        before, after = phi[i - 1], phi[i]
        s = math.sin(before + after)
        M[i, (i - 1) % n] = math.sin(after) / s
        M[i, (i + 1) % n] = math.sin(before) / s
    return M


def _perron(M: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eig(M)
    k = int(np.argmax(w.real))
    vec = np.abs(v[:, k].real)
    return float(w[k].real), vec


def equalized_alpha(angles) -> float:
    """Smallest achievable max alpha for the given sorted directions in [0, pi)."""
    angles = np.asarray(angles, dtype=float)
    phi = _gaps(angles)
    if np.any(phi <= 0) or np.any(phi[:-1] + phi[1:] >= math.pi) or phi[-1] + phi[0] >= math.pi:
        return math.inf
    rho, _ = _perron(neighbor_matrix(angles))
    return 1.0 / rho


def equalized_config(angles) -> PointConfig:
    """Directions ``angles`` with the lengths that make every alpha equal."""
    angles = np.asarray(angles, dtype=float)
    _, y = _perron(neighbor_matrix(angles))
    lengths = 1.0 / y
    return PointConfig.from_polar(angles, lengths / lengths.max())


def _max_alpha(S: PointConfig) -> float:
    try:
        return float(np.max(neighbor_alphas(S)))
    except StructuralError:
        return math.inf


def _equalize(S: PointConfig, cfg: SearchConfig) -> tuple[PointConfig, bool, list[float]]:
    if S.d != 2:
        raise InputError("length equalisation is planar only")
    if S.n < 3:
        return S, True, []
    if not is_strictly_convex_antipodal(S, cfg.tol):
        raise StructuralError("configuration must be normalised and strictly convex antipodal")
    n = S.n
    pts = S.points.copy()
    alphas = neighbor_alphas(S)
    history = [float(alphas.max())]
    delta = cfg.step
    spread_tol = cfg.tol.residual_tol * 1e-4
    converged = False
    for _ in range(cfg.max_iters * n):
        if alphas.max() - alphas.min() <= spread_tol:
            converged = True
            break
        if delta < 1e-15:
            converged = True
            break
        top = int(np.argmax(alphas))
        left, right = (top - 1) % n, (top + 1) % n
        j = left if alphas[left] <= alphas[right] else right
        trial = pts.copy()
        trial[j] *= 1.0 - delta
        T = PointConfig(trial)
        if not is_strictly_convex_antipodal(T, cfg.tol):
            return PointConfig(pts), False, history
        new = neighbor_alphas(T)
        # lexicographic comparison of the sorted alphas handles ties at the top
        if _lex_less(np.sort(new)[::-1], np.sort(alphas)[::-1]):
            pts, alphas = trial, new
            history.append(float(alphas.max()))
        else:
            delta *= cfg.shrink
    return PointConfig(pts), converged, history


def _lex_less(a: np.ndarray, b: np.ndarray, tol: float = 1e-15) -> bool:
    for x, y in zip(a, b):
        if x < y - tol:
            return True
        if x > y + tol:
            return False
    return False


def equalize_lengths(S: PointConfig, cfg: SearchConfig) -> PointConfig:
    """Repeatedly shrink the weaker neighbour of the largest alpha by ``1 - delta``.

    ``delta`` starts at ``cfg.step`` and is multiplied by ``cfg.shrink`` after
    every non-improving move. The largest alpha never increases.
    """
    out, _, _ = _equalize(S, cfg)
    return out


def _golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _angle_descent(angles: np.ndarray, cfg: SearchConfig) -> tuple[np.ndarray, list[float], bool]:
    """Coordinate descent over angles 1..n-1 (angle 0 pinned) on the equalised alpha."""
    n = angles.size
    angles = angles.copy()
    best = equalized_alpha(angles)
    history = [best]
    converged = False
    for _ in range(cfg.max_iters):
        before = best
        for i in range(1, n):
            lo = angles[i - 1]
            hi = angles[i + 1] if i < n - 1 else math.pi
            width = hi - lo
            trial = angles.copy()

            def f(x):
                trial[i] = x
                return equalized_alpha(trial)

            x, fx = _golden_min(f, lo + 1e-9 * width, hi - 1e-9 * width, 1e-7 * max(width, 1e-3))
            if fx < best:
                angles[i] = x
                best = fx
        history.append(best)
        if before - best <= 1e-13:
            converged = True
            break
    return angles, history, converged


def optimize_d2(n: int, cfg: SearchConfig) -> SearchResult:
    """Random-restart search for planar configurations minimising the largest alpha."""
    if n < 2:
        raise InputError("need n >= 2")
    results = []
    for r in range(cfg.restarts):
        rng = cfg.rng(r)
        if n == 2:
            ang = np.sort(rng.uniform(0.0, math.pi, 2))
            S = normalize_antipodal(PointConfig.from_polar(ang))
            results.append((0.0, r, S, [0.0], 0, True))
            continue
        ang = np.sort(rng.uniform(0.0, math.pi, n))
        ang -= ang[0]
        while equalized_alpha(ang) == math.inf:
            ang = np.sort(rng.uniform(0.0, math.pi, n))
            ang -= ang[0]
        ang, history, converged = _angle_descent(ang, cfg)
        S = equalized_config(ang)
        S, ok, eq_hist = _equalize(S, cfg)
        value = _max_alpha(S)
        history = history + eq_hist[1:]
        results.append((value, r, S, history, len(history) - 1, converged and ok))
    value, r, S, history, iters, converged = min(results, key=lambda t: (t[0], t[1]))
    cert = dualize(nullspace_of_config(S, cfg.tol), cfg.tol)
    cert = OffCertificate(cert.n, cert.d, cert.G, cert.eps, cert.rank_residual, "searched", cert.annihilation)
    return SearchResult(cert, S, history, iters, converged, r, list(np.minimum.accumulate(history)))


# --------------------------------------------------------------------------
# general dimension


def _subspace_alignment(B: np.ndarray, tol: Tolerances) -> float:
    if B.shape[1] == 1:
        a = B[:, 0]
        return max(align_index_vector(a, i) for i in range(a.size))
    value, _ = align_subspace(Subspace(B), tol)
    return value


def _alignment_gradients(B: np.ndarray, tol: Tolerances):
    """Per-index alignments of span(B) and their gradients with respect to B.

    With ``c`` the optimal coefficients (scaled so the off-index l1 norm is 1)
    and ``v`` the optimal dual row, the derivative of ``Al_i`` along ``D`` is
    ``v^T D c``. Returns None when some alignment is infinite.
    """
    A = Subspace(B)
    values, grads = [], []
    for i in range(A.n):
        cert = align_index_subspace(A, i, tol)
        if not math.isfinite(cert.value):
            return None
        w = cert.witness
        rest = float(np.sum(np.abs(np.delete(w, i))))
        c = B.T @ w / rest
        try:
            v, _ = dual_row(A, i, tol)
        except InfiniteAlignmentError:
            return None
        values.append(cert.value)
        grads.append(np.outer(v, c))
    return np.array(values), grads


def _polish(B: np.ndarray, tol: Tolerances, max_iters: int = 200,
            radius: float = 0.05) -> tuple[np.ndarray, float, list[float]]:
    """Trust-region sequential LP on ``max_i Al_i``.

    Each step minimises the linearised maximum over perturbations
    ``W X`` with ``W`` spanning the orthogonal complement and ``|X| <= radius``.
    """
    n, k = B.shape
    B = orthonormal_basis(B, tol)
    state = _alignment_gradients(B, tol)
    if state is None:
        return B, math.inf, []
    values, grads = state
    f = float(values.max())
    history = [f]
    for _ in range(max_iters):
        if radius < 1e-12:
            break
        W = nullspace(B.T, tol)
        dk = W.shape[1] * k
        lp = LpBuilder()
        xs = [lp.var(-radius, radius) for _ in range(dk)]
        t = lp.free(cost=1.0)
        for fi, g in zip(values, grads):
            coef = (W.T @ g).reshape(-1)
            expr = {x: float(cf) for x, cf in zip(xs, coef)}
            expr[t] = -1.0
            lp.row(expr, LE, -float(fi))
        sol = lp.solve(tol)
        if sol.status != OPTIMAL:
            break
        predicted = f - float(sol.x[t])
        if predicted <= 1e-15:
            break
        X = np.array([sol.x[x] for x in xs]).reshape(W.shape[1], k)
        trial = orthonormal_basis(B + W @ X, tol)
        if trial.shape[1] != k:
            radius *= 0.25
            continue
        new = _alignment_gradients(trial, tol)
        ft = math.inf if new is None else float(new[0].max())
        ratio = (f - ft) / predicted
        if ratio > 0.1:
            B, f = trial, ft
            values, grads = new
            history.append(f)
            if ratio > 0.75:
                radius = min(2.0 * radius, 0.5)
        else:
            radius *= 0.25
    return B, f, history


def optimize_general(n: int, d: int, cfg: SearchConfig) -> SearchResult:
    """Stochastic local search over ``(n - d)``-dimensional subspaces.

    Proposals perturb the basis by ``step`` times a Gaussian matrix and
    re-orthonormalise. Worse proposals are accepted with probability
    ``exp(-increase / T)`` where ``T`` decays linearly from
    ``cfg.temperature``. The step shrinks after 2k consecutive rejections.
    The result is an upper bound; no optimality is claimed.
    """
    if not 1 <= d < n:
        raise InputError(f"need 1 <= d < n, got n={n}, d={d}")
    k = n - d
    tol = cfg.tol
    runs = []
    for r in range(cfg.restarts):
        rng = cfg.rng(r)
        B = orthonormal_basis(rng.standard_normal((n, k)), tol)
        f = _subspace_alignment(B, tol)
        best_B, best_f = B, f
        history = [f]
        step = cfg.step
        stale = 0
        iters = 0
        for it in range(cfg.max_iters):
            iters = it + 1
            temp = cfg.temperature * (1.0 - it / cfg.max_iters)
            trial = np.linalg.qr(B + step * rng.standard_normal((n, k)))[0]
            ft = _subspace_alignment(trial, tol)
            accept = ft < f or (temp > 0 and math.isfinite(ft) and rng.random() < math.exp(-(ft - f) / temp))
            if accept:
                B, f = trial, ft
                stale = 0
                if f < best_f:
                    best_B, best_f = B, f
            else:
                stale += 1
                if stale >= 2 * k * n:
                    step *= cfg.shrink
                    stale = 0
                    B, f = best_B, best_f
            history.append(best_f)
            if step < 1e-10:
                break
        polished, pf, phist = _polish(best_B, tol)
        if pf < best_f:
            best_B, best_f = polished, pf
            history += phist[1:]
            iters += len(phist) - 1
        runs.append((best_f, r, best_B, history, iters, step < 1e-10))
    best_f, r, B, history, iters, converged = min(runs, key=lambda t: (t[0], t[1]))
    A = Subspace(orthonormal_basis(B, tol))
    cert = dualize(A, tol)
    cert = OffCertificate(cert.n, cert.d, cert.G, cert.eps, cert.rank_residual, "searched", cert.annihilation)
    return SearchResult(cert, A, history, iters, converged, r, list(np.minimum.accumulate(history)))


def solve(n: int, d: int, cfg: SearchConfig) -> SearchResult:
    if d == 2 and n >= 2:
        return optimize_d2(n, cfg)
    if d >= n:
        A = Subspace.zero(n)
        cert = dualize(A, cfg.tol)
        cert = OffCertificate(n, d, cert.G, cert.eps, cert.rank_residual, "searched", cert.annihilation)
        return SearchResult(cert, A, [0.0], 0, True, 0, [0.0])
    return optimize_general(n, d, cfg)
