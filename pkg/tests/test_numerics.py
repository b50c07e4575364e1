from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from gramlax.numerics import (
    DEFAULT_TOL, EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, InputError, LpBuilder, LpProblem,
    SolverError, Tolerances, lp_solve, nullspace, numeric_rank, orthonormal_basis,
    symmetric_eigenvalues,
)
from gramlax.rank2 import optimal_config, rank2_pipeline

from lp_cases import cases

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- tolerances

def test_default_tolerances():
    t = Tolerances()
    assert (t.rank_tol, t.lp_pivot_tol, t.residual_tol, t.psd_tol) == (1e-10, 1e-9, 1e-8, 1e-9)


@pytest.mark.parametrize("bad", [0.0, -1e-3, float("inf"), float("nan")])
def test_tolerances_must_be_positive(bad):
    with pytest.raises(InputError):
        Tolerances(residual_tol=bad)


def test_overrides_ignore_none():
    t = DEFAULT_TOL.with_overrides(residual_tol=1e-6, psd_tol=None)
    assert t.residual_tol == 1e-6 and t.psd_tol == DEFAULT_TOL.psd_tol


# ---------------------------------------------------------------- subspaces

def test_orthonormal_basis_examples():
    b = orthonormal_basis([[2.0], [0.0]])
    assert np.allclose(np.abs(b), [[1.0], [0.0]])
    b = orthonormal_basis([[1.0, 1.0], [1.0, 1.0]])
    assert b.shape == (2, 1)
    assert np.allclose(np.abs(b[:, 0]), [2 ** -0.5, 2 ** -0.5])
    b = orthonormal_basis(np.eye(3))
    assert b.shape == (3, 3) and np.allclose(b.T @ b, np.eye(3))


def test_orthonormal_basis_rejects_zero():
    with pytest.raises(InputError):
        orthonormal_basis(np.zeros((3, 2)))


def test_nullspace_examples():
    ns = nullspace([[1.0, 1.0]])
    assert ns.shape == (2, 1)
    assert np.allclose(np.abs(ns[:, 0]), [2 ** -0.5, 2 ** -0.5])
    assert ns[0, 0] * ns[1, 0] < 0
    assert nullspace(np.eye(2)).shape == (2, 0)


def test_nullspace_of_regular_three_lines():
    W = optimal_config(3).points.T
    ns = nullspace(W)
    assert ns.shape == (3, 1)
    v = ns[:, 0] / ns[0, 0]
    assert np.allclose(v, [1.0, -1.0, 1.0], atol=1e-12)
    assert np.max(np.abs(W @ ns)) < 1e-12


def test_numeric_rank_examples():
    assert numeric_rank(np.eye(4)) == 4
    assert numeric_rank(np.outer([1.0, 2.0, 3.0], [4.0, -1.0])) == 1
    assert numeric_rank(rank2_pipeline(5).Q_prime) == 2


def test_numeric_rank_uses_absolute_floor():
    # a tiny matrix is not rescaled: its singular values fall below rank_tol
    assert numeric_rank(1e-12 * np.eye(3)) == 0


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_orthonormal_basis_is_orthonormal(m):
    if numeric_rank(m) == 0:
        with pytest.raises(InputError):
            orthonormal_basis(m)
        return
    b = orthonormal_basis(m)
    assert np.max(np.abs(b.T @ b - np.eye(b.shape[1]))) <= DEFAULT_TOL.residual_tol


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_nullspace_width_plus_rank(m):
    ns = nullspace(m)
    assert ns.shape[1] + numeric_rank(m) == m.shape[1]
    if ns.shape[1]:
        scale = max(float(np.max(np.abs(m))), 1.0)
        assert np.max(np.abs(m @ ns)) <= DEFAULT_TOL.residual_tol * scale


@given(st.integers(2, 6).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite)))
def test_eigenvalues_sum_to_trace(m):
    sym = (m + m.T) / 2
    w = symmetric_eigenvalues(sym)
    assert np.all(np.diff(w) >= 0)
    tr = float(np.trace(sym))
    assert abs(w.sum() - tr) <= 1e-8 * abs(tr) + 1e-12 * max(1.0, float(np.max(np.abs(sym)))) * 10


def test_eigenvalue_examples():
    assert np.allclose(symmetric_eigenvalues(np.diag([1.0, 2.0, 3.0])), [1, 2, 3])
    assert np.allclose(symmetric_eigenvalues([[0.0, 1.0], [1.0, 0.0]]), [-1, 1])
    q = rank2_pipeline(3).Q_prime
    assert np.allclose(symmetric_eigenvalues(q), [0.0, 1.5, 1.5], atol=1e-12)


def test_eigenvalues_of_three_lines_by_characteristic_polynomial():
    q = np.array([[1, 0.5, -0.5], [0.5, 1, 0.5], [-0.5, 0.5, 1]])
    # det(q - x I) = -(x^3 - 3x^2 + 2.25x) = -x (x - 1.5)^2
    coeffs = np.poly(q)
    assert np.allclose(coeffs, [1.0, -3.0, 2.25, 0.0], atol=1e-12)


def test_eigenvalues_reject_asymmetry():
    with pytest.raises(InputError):
        symmetric_eigenvalues([[1.0, 2.0], [0.0, 1.0]])


# ---------------------------------------------------------------- LP

def test_lp_spec_examples():
    s = lp_solve(LpProblem([-1.0], [[1.0]], [3.0], [LE], [(0.0, np.inf)]))
    assert s.status == OPTIMAL and s.objective == pytest.approx(-3.0) and s.x[0] == pytest.approx(3.0)
    s = lp_solve(LpProblem([-1.0, -1.0], [[1.0, 1.0]], [1.0], [LE], [(0.0, np.inf)] * 2))
    assert s.status == OPTIMAL and s.objective == pytest.approx(-1.0)
    s = lp_solve(LpProblem([-1.0], np.zeros((0, 1)), [], [], [(0.0, np.inf)]))
    assert s.status == UNBOUNDED


@pytest.mark.parametrize("name,problem,status,value", cases(), ids=[c[0] for c in cases()])
def test_hand_built_lps(name, problem, status, value):
    sol = lp_solve(problem)
    assert sol.status == status
    if status == OPTIMAL:
        assert abs(sol.objective - value) <= 1e-9
        assert problem.violation(sol.x) <= DEFAULT_TOL.lp_pivot_tol
        assert abs(sol.objective - problem.c @ sol.x) <= DEFAULT_TOL.residual_tol
    if status == UNBOUNDED:
        # the ray keeps every row feasible and improves the objective
        d = sol.ray
        assert problem.c @ d < 0
        for row, sense in zip(problem.A, problem.senses):
            if sense == LE:
                assert row @ d <= 1e-9
            elif sense == GE:
                assert row @ d >= -1e-9
            else:
                assert abs(row @ d) <= 1e-9
    if status == INFEASIBLE:
        assert sol.infeasibility > 0


def test_lp_dimension_mismatch():
    with pytest.raises(InputError):
        LpProblem([1.0, 2.0], [[1.0]], [1.0], [LE], [(0, np.inf)] * 2)
    with pytest.raises(InputError):
        LpProblem([1.0], [[1.0]], [1.0, 2.0], [LE], [(0, np.inf)])
    with pytest.raises(InputError):
        LpProblem([1.0], [[1.0]], [1.0], ["<"], [(0, np.inf)])


def test_lp_is_deterministic():
    p = cases()[11][1]
    a, b = lp_solve(p), lp_solve(p)
    assert np.array_equal(a.x, b.x) and a.pivots == b.pivots


def test_pivot_cap_is_a_solver_error(monkeypatch):
    from gramlax import numerics

    monkeypatch.setattr(numerics, "MAX_PIVOTS", 0)
    with pytest.raises(SolverError):
        lp_solve(cases()[10][1])


def test_builder_absolute_values():
    lp = LpBuilder()
    x = lp.free()
    t = lp.var(cost=1.0)
    lp.abs_le({x: 1.0}, t)
    lp.row({x: 1.0}, EQ, -2.5)
    sol = lp.solve()
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(2.5)


def _exact_vertex(problem: LpProblem, x: np.ndarray):
    """Re-derive the vertex from its active constraints in rational arithmetic."""
    nv = problem.num_vars
    rows, rhs = [], []
    for r, b in zip(problem.A, problem.b):
        if abs(r @ x - b) <= 1e-7:
            rows.append(r)
            rhs.append(b)
    for j, bounds in enumerate(problem.bounds):
        for bound in bounds:
            if np.isfinite(bound) and abs(x[j] - bound) <= 1e-7:
                e = np.zeros(nv)
                e[j] = 1.0
                rows.append(e)
                rhs.append(bound)
    # greedy choice of nv independent active rows
    chosen = []
    for k in range(len(rows)):
        trial = chosen + [k]
        if np.linalg.matrix_rank(np.array([rows[i] for i in trial]), tol=1e-9) == len(trial):
            chosen = trial
        if len(chosen) == nv:
            break
    if len(chosen) < nv:
        return None
    M = [[Fraction(float(v)) for v in rows[i]] + [Fraction(float(rhs[i]))] for i in chosen]
    # Gauss-Jordan elimination over the rationals
    for col in range(nv):
        piv = next(r for r in range(col, nv) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(nv):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[i][nv] for i in range(nv)]


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_random_bounded_lps_against_rational_recheck_and_scipy(nv, m, data):
    A = data.draw(arrays(np.float64, (m, nv), elements=st.integers(-5, 5).map(float)))
    b = data.draw(arrays(np.float64, (m,), elements=st.integers(0, 10).map(float)))
    c = data.draw(arrays(np.float64, (nv,), elements=st.integers(-5, 5).map(float)))
    # box bounds keep every instance bounded; b >= 0 keeps the origin feasible
    p = LpProblem(c, A, b, [LE] * m, [(0.0, 10.0)] * nv)
    sol = lp_solve(p)
    assert sol.status == OPTIMAL
    assert p.violation(sol.x) <= DEFAULT_TOL.lp_pivot_tol
    exact = _exact_vertex(p, sol.x)
    assert exact is not None
    xe = np.array([float(v) for v in exact])
    assert np.max(np.abs(xe - sol.x)) <= 1e-9
    # exact feasibility of the rational vertex
    for row, rhs in zip(A, b):
        assert sum(Fraction(float(a)) * v for a, v in zip(row, exact)) <= Fraction(float(rhs)) + Fraction(1, 10**9)
    ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 10)] * nv, method="highs")
    assert abs(ref.fun - sol.objective) <= 1e-7


@given(st.integers(1, 4), st.data())
def test_random_infeasible_lps(nv, data):
    a = data.draw(arrays(np.float64, (nv,), elements=st.integers(-5, 5).map(float)))
    if not np.any(a):
        return
    lo = data.draw(st.integers(-5, 5))
    # a.x <= lo and a.x >= lo + 1 cannot both hold
    p = LpProblem(np.zeros(nv), [a, a], [lo, lo + 1], [LE, GE], [(-np.inf, np.inf)] * nv)
    assert lp_solve(p).status == INFEASIBLE
