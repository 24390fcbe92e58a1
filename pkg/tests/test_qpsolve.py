import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gsrpipe.qpsolve import (
    CONVERGED,
    INFEASIBLE_SUSPECTED,
    QpSolution,
    QuadraticProgram,
    solve_qp,
)

from .oracles import dense_qp_oracle, make_known_optimum_qp


def _qp(P, c, G, h):
    return QuadraticProgram(P=sp.csc_matrix(P), c=np.asarray(c, float),
                            G=sp.csc_matrix(G), h=np.asarray(h, float))


def test_one_dimensional_bound():
    # min 1/2 x^2 - x  s.t. x >= 2  ->  clamp at the bound
    sol = solve_qp(_qp([[1.0]], [-1.0], [[1.0]], [2.0]))
    assert sol.status == CONVERGED
    assert sol.x[0] == pytest.approx(2.0, abs=1e-8)
    assert sol.multipliers[0] == pytest.approx(1.0, abs=1e-6)


def test_inactive_constraint_is_ignored():
    sol = solve_qp(_qp([[1.0]], [-1.0], [[1.0]], [0.0]))
    assert sol.status == CONVERGED
    assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
    assert sol.multipliers[0] == pytest.approx(0.0, abs=1e-8)


def test_matches_enumeration_oracle_small():
    rng = np.random.default_rng(1234)
    for _ in range(30):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, 7))
        L = rng.normal(size=(n, n))
        P = L @ L.T + n * np.eye(n)
        c = rng.normal(size=n)
        G = rng.normal(size=(m, n))
        h = G @ rng.normal(size=n) - rng.uniform(0.0, 1.0, size=m)
        x_ref, _ = dense_qp_oracle(P, c, G, h)
        sol = solve_qp(_qp(P, c, G, h), tol=1e-8)
        assert sol.status == CONVERGED
        np.testing.assert_allclose(sol.x, x_ref, atol=1e-6)


def test_known_optimum_construction():
    rng = np.random.default_rng(7)
    P, c, G, h, x_star = make_known_optimum_qp(rng, n=12, m=8, n_active=3)
    sol = solve_qp(_qp(P, c, G, h), tol=1e-8)
    assert sol.status == CONVERGED
    np.testing.assert_allclose(sol.x, x_star, atol=1e-6)


def test_unconstrained_reduces_to_linear_solve():
    rng = np.random.default_rng(3)
    L = rng.normal(size=(6, 6))
    P = L @ L.T + 6 * np.eye(6)
    c = rng.normal(size=6)
    qp = _qp(P, c, np.zeros((0, 6)), np.zeros(0))
    sol = solve_qp(qp, tol=1e-10)
    assert sol.status == CONVERGED
    np.testing.assert_allclose(sol.x, np.linalg.solve(P, -c), atol=1e-8)
    assert sol.multipliers.size == 0


def test_infeasible_problem_is_flagged():
    # x >= 1 and -x >= 1 cannot both hold
    qp = _qp([[1.0]], [0.0], [[1.0], [-1.0]], [1.0, 1.0])
    sol = solve_qp(qp)
    assert sol.status == INFEASIBLE_SUSPECTED


def test_deterministic_across_calls():
    rng = np.random.default_rng(11)
    P, c, G, h, _ = make_known_optimum_qp(rng, n=10, m=6, n_active=2)
    qp = _qp(P, c, G, h)
    a = solve_qp(qp)
    b = solve_qp(qp)
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations
    assert a.status == b.status


def test_residual_trace_grows_and_shrinks():
    rng = np.random.default_rng(5)
    P, c, G, h, _ = make_known_optimum_qp(rng, n=10, m=6, n_active=2)
    trace = []
    solve_qp(_qp(P, c, G, h), residual_trace=trace)
    assert len(trace) >= 1
    iters = [t[0] for t in trace]
    assert iters == sorted(iters)


def test_validation_rejects_bad_shapes():
    with pytest.raises(ValueError, match="P shape"):
        _qp(np.eye(3), [1.0, 2.0], np.zeros((0, 2)), [])
    with pytest.raises(ValueError, match="G shape"):
        _qp(np.eye(2), [1.0, 2.0], np.zeros((3, 4)), np.zeros(3))


def test_validation_rejects_asymmetric_and_nonfinite():
    with pytest.raises(ValueError, match="symmetric"):
        _qp([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0], np.zeros((0, 2)), [])
    with pytest.raises(ValueError, match="non-finite"):
        _qp([[np.nan]], [0.0], np.zeros((0, 1)), [])
    with pytest.raises(ValueError, match="non-finite"):
        _qp([[1.0]], [np.inf], np.zeros((0, 1)), [])


def test_bad_solver_settings():
    qp = _qp([[1.0]], [0.0], [[1.0]], [0.0])
    with pytest.raises(ValueError):
        solve_qp(qp, tol=0.0)
    with pytest.raises(ValueError):
        solve_qp(qp, max_iter=0)


def test_solution_dataclass_reports_scaled_residuals():
    sol = solve_qp(_qp([[2.0]], [4.0], [[1.0]], [-10.0]), tol=1e-9)
    assert isinstance(sol, QpSolution)
    assert sol.primal_residual <= 1e-9
    assert sol.dual_residual <= 1e-9
    assert sol.x[0] == pytest.approx(-2.0, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=0, max_value=4))
def test_property_constructed_optimum_recovered(seed, n_active):
    """Any constructed strictly convex QP is solved to its known optimum."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 16))
    m = int(rng.integers(max(1, n_active), 10))
    P, c, G, h, x_star = make_known_optimum_qp(rng, n=n, m=m, n_active=min(n_active, n, m))
    sol = solve_qp(_qp(P, c, G, h), tol=1e-8)
    assert sol.status == CONVERGED
    np.testing.assert_allclose(sol.x, x_star, atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_property_kkt_residuals_meet_tolerance(seed):
    rng = np.random.default_rng(seed)
    P, c, G, h, _ = make_known_optimum_qp(rng, n=8, m=6, n_active=int(rng.integers(0, 4)))
    tol = 1e-7
    sol = solve_qp(_qp(P, c, G, h), tol=tol)
    assert sol.status == CONVERGED
    assert sol.primal_residual <= tol
    assert sol.dual_residual <= tol
