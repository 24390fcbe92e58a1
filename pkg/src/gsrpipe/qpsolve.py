"""Sparse convex quadratic programming by operator splitting.

Solves

    minimize    0.5 * x' P x + c' x
    subject to  G x >= h

with an ADMM scheme in the style of first-order operator-splitting QP
solvers: a single symmetric system ``P + sigma*I + rho*G'G`` is factorized
once and reused across iterations, with over-relaxation and residual-balanced
rho updates (each rho change triggers one refactorization).  Once the
iterates are close, an active-set polish step solves the reduced KKT system
directly to push the residuals to machine-level accuracy.

The matrices here are banded-plus-low-rank (see ``decompose``), so the
sparse LU factorization has bounded fill-in and iterations are near-linear
in the number of variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE_SUSPECTED = "infeasible-suspected"

_SIGMA = 1e-6
_ALPHA = 1.6          # over-relaxation
_RHO_MIN, _RHO_MAX = 1e-6, 1e6
_CHECK_EVERY = 25
_ADAPT_EVERY = 50
_RHO_REFACTOR_BAND = 5.0  # refactor only when rho moves by more than this
_POLISH_ROUNDS = 40       # active-set corrections before giving up
_POLISH_REFINE = 4        # iterative-refinement sweeps per KKT solve
_POLISH_BACKOFF = 100     # initial iteration gap between failed attempts


@dataclass(frozen=True)
class QuadraticProgram:
    """QP data: minimize 0.5 x'Px + c'x subject to Gx >= h.

    ``P`` and ``G`` are stored sparse; ``G``/``h`` may be empty for an
    unconstrained problem.
    """

    P: sp.csc_matrix
    c: np.ndarray
    G: sp.csc_matrix
    h: np.ndarray

    def __post_init__(self):
        P = sp.csc_matrix(self.P)
        c = np.asarray(self.c, dtype=np.float64).ravel()
        G = sp.csc_matrix(self.G)
        h = np.asarray(self.h, dtype=np.float64).ravel()
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

        n = c.size
        if P.shape != (n, n):
            raise ValueError(f"P shape {P.shape} inconsistent with c of length {n}")
        if G.shape != (h.size, n):
            raise ValueError(f"G shape {G.shape} inconsistent with h of length {h.size} and n={n}")
        for name, mat in (("P", P), ("G", G)):
            if mat.nnz and not np.isfinite(mat.data).all():
                raise ValueError(f"{name} contains non-finite entries")
        for name, vec in (("c", c), ("h", h)):
            if vec.size and not np.isfinite(vec).all():
                raise ValueError(f"{name} contains non-finite entries")
        asym = abs(P - P.T)
        scale = max(abs(P).max(), 1.0) if P.nnz else 1.0
        if asym.nnz and asym.max() > 1e-12 * scale:
            raise ValueError("P is not symmetric within 1e-12 relative tolerance")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.h.size

    def objective(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ (self.P @ x)) + float(self.c @ x)


@dataclass(frozen=True)
class QpSolution:
    """Solver output.

    ``primal_residual`` is the worst constraint violation scaled by
    1 + max|h| and ``dual_residual`` the stationarity residual
    max|Px + c - G'lambda| scaled by 1 + max|c|, so ``status == converged``
    implies both are <= the tolerance passed to :func:`solve_qp`.
    """

    x: np.ndarray
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    multipliers: np.ndarray = field(repr=False, default=None)


def _kkt_residuals(qp: QuadraticProgram, x, lam, h_scale, c_scale):
    """(primal, dual, complementarity) residuals for a candidate KKT pair."""
    if qp.m:
        slack = qp.G @ x - qp.h
        prim = float(np.maximum(-slack, 0.0).max())
        comp = float(np.abs(lam * slack).max())
        station = qp.P @ x + qp.c - qp.G.T @ lam
    else:
        prim, comp = 0.0, 0.0
        station = qp.P @ x + qp.c
    dual = float(np.abs(station).max()) if qp.n else 0.0
    return prim / h_scale, dual / c_scale, comp


def _kkt_interleave(n: int, Ga: sp.csr_matrix) -> np.ndarray:
    """Symmetric ordering that keeps the reduced KKT factorization sparse.

    Each multiplier row is placed right after the last primal column its
    constraint touches, so banded G rows stay banded in the factor instead
    of forming the classic KKT arrowhead.  Rows are sorted by that column,
    ties kept in row order.
    """
    na = Ga.shape[0]
    last_col = np.zeros(na, dtype=np.int64)
    for j in range(na):
        cols = Ga.indices[Ga.indptr[j] : Ga.indptr[j + 1]]
        last_col[j] = cols.max() if cols.size else 0
    order = np.argsort(last_col, kind="stable")
    perm = np.empty(n + na, dtype=np.int64)
    pos = 0
    ptr = 0
    for col in range(n):
        perm[pos] = col
        pos += 1
        while ptr < na and last_col[order[ptr]] == col:
            perm[pos] = n + order[ptr]
            pos += 1
            ptr += 1
    while ptr < na:
        perm[pos] = n + order[ptr]
        pos += 1
        ptr += 1
    return perm


def _refine(lu, operator, rhs, sol):
    """Iterative refinement keeping the iterate with the smallest residual.

    The guard against divergence matters because the factored matrix is a
    regularized stand-in for the exact (possibly singular) KKT system.
    """
    if not np.isfinite(sol).all():
        return None, np.inf
    best_sol, best_norm = sol, float(np.abs(rhs - operator(sol)).max())
    for _ in range(_POLISH_REFINE):
        resid = rhs - operator(sol)
        sol = sol + lu.solve(resid)
        if not np.isfinite(sol).all():
            break
        norm = float(np.abs(rhs - operator(sol)).max())
        if norm < best_norm:
            best_sol, best_norm = sol, norm
    return best_sol, best_norm


def _solve_active_kkt(qp: QuadraticProgram, active: np.ndarray):
    """Solve the KKT system with the ``active`` rows of G pinned to equality.

    The system is regularized with a tiny diagonal shift so rank-deficient
    active sets still factorize.  The shifted matrix is quasi-definite, so
    it is factorized with diagonal pivoting under an interleaved ordering
    (cheap and sparse); the solution is refined against the unregularized
    operator, and if refinement cannot reach a small residual the slower
    pivoting factorization is used as a fallback.  Returns ``(x, mu)`` with
    signed multipliers for the active rows, or None when every attempt
    fails.
    """
    n = qp.n
    na = int(active.size)
    delta = 1e-9
    if na == 0:
        K_reg = sp.csc_matrix(qp.P + delta * sp.eye(n, format="csc"))
        rhs = -qp.c
        operator = lambda sol: qp.P @ sol  # noqa: E731
        try:
            lu = spla.splu(K_reg)
        except RuntimeError:
            return None
        best_sol, _ = _refine(lu, operator, rhs, lu.solve(rhs))
        if best_sol is None:
            return None
        return best_sol, np.zeros(0)

    Ga = qp.G[active].tocsc()
    K_reg = sp.bmat(
        [
            [qp.P + delta * sp.eye(n, format="csc"), Ga.T],
            [Ga, -delta * sp.eye(na, format="csc")],
        ],
        format="csc",
    )
    rhs = np.concatenate([-qp.c, qp.h[active]])
    GaT = Ga.T.tocsc()
    operator = lambda sol: np.concatenate(  # noqa: E731
        [qp.P @ sol[:n] + GaT @ sol[n:], Ga @ sol[:n]]
    )
    rhs_scale = max(float(np.abs(rhs).max()), 1.0)

    perm = _kkt_interleave(n, Ga.tocsr())
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    Kp = K_reg[perm][:, perm].tocsc()
    best_sol, best_norm = None, np.inf
    try:
        lu = spla.splu(
            Kp,
            permc_spec="NATURAL",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
        solve = lambda b: lu.solve(b[perm])[inv]  # noqa: E731
        sol = solve(rhs)
        if np.isfinite(sol).all():
            best_sol, best_norm = sol, float(np.abs(rhs - operator(sol)).max())
            for _ in range(_POLISH_REFINE):
                sol = sol + solve(rhs - operator(sol))
                if not np.isfinite(sol).all():
                    break
                norm = float(np.abs(rhs - operator(sol)).max())
                if norm < best_norm:
                    best_sol, best_norm = sol, norm
    except RuntimeError:
        best_sol = None

    if best_sol is None or best_norm > 1e-8 * rhs_scale:
        try:
            lu = spla.splu(K_reg)
        except RuntimeError:
            return None
        fallback, fb_norm = _refine(lu, operator, rhs, lu.solve(rhs))
        if fallback is not None and (best_sol is None or fb_norm < best_norm):
            best_sol = fallback
    if best_sol is None:
        return None
    return best_sol[:n], -best_sol[n:]


def _polish(qp: QuadraticProgram, x, lam, tol, h_scale, c_scale):
    """Push a near-converged iterate to machine-level KKT residuals.

    Starts from the active set suggested by the iterate and runs a few
    primal-dual corrections: rows whose polished multiplier comes out
    negative are dropped, rows the polished point violates are added,
    and the reduced KKT system is re-solved.  Returns
    ``(x, lam, prim, dual)`` once the full KKT test passes, or None if it
    never does (the caller keeps iterating).
    """
    slack = qp.G @ x - qp.h
    active = np.flatnonzero(lam > np.maximum(slack, 0.0))
    seen: set[bytes] = set()
    for _ in range(_POLISH_ROUNDS):
        key = active.tobytes()
        if key in seen:
            return None
        seen.add(key)
        cand = _solve_active_kkt(qp, active)
        if cand is None:
            return None
        x_pol, mu = cand
        lam_pol = np.zeros(qp.m)
        lam_pol[active] = np.maximum(mu, 0.0)
        prim, dual, comp = _kkt_residuals(qp, x_pol, lam_pol, h_scale, c_scale)
        if prim <= tol and dual <= tol and comp <= tol:
            return x_pol, lam_pol, prim, dual
        lam_signed = np.zeros(qp.m)
        lam_signed[active] = mu
        active = np.flatnonzero(lam_signed - (qp.G @ x_pol - qp.h) > 0.0)
    return None


def _solve_unconstrained(qp: QuadraticProgram, tol, max_iter, c_scale):
    n = qp.n
    lu = spla.splu(sp.csc_matrix(qp.P + _SIGMA * sp.eye(n)))
    x = np.zeros(n)
    for it in range(1, max_iter + 1):
        resid = -(qp.P @ x + qp.c)
        dual = float(np.abs(resid).max()) / c_scale
        if dual <= tol:
            return QpSolution(x, CONVERGED, it - 1, 0.0, dual, np.zeros(0))
        x = x + lu.solve(resid)
    resid = -(qp.P @ x + qp.c)
    dual = float(np.abs(resid).max()) / c_scale
    status = CONVERGED if dual <= tol else MAX_ITERATIONS
    return QpSolution(x, status, max_iter, 0.0, dual, np.zeros(0))


def solve_qp(
    qp: QuadraticProgram,
    tol: float = 1e-6,
    max_iter: int = 20000,
    rho: float = 1.0,
    residual_trace: list | None = None,
) -> QpSolution:
    """Solve ``qp`` to KKT residuals <= tol (scaled; see :class:`QpSolution`).

    Deterministic: no randomized internals, so repeated calls return
    bit-identical solutions.  Hitting ``max_iter`` is reported through the
    status field, not an exception.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    n, m = qp.n, qp.m
    c_scale = 1.0 + (float(np.abs(qp.c).max()) if n else 0.0)
    h_scale = 1.0 + (float(np.abs(qp.h).max()) if m else 0.0)

    if m == 0:
        return _solve_unconstrained(qp, tol, max_iter, c_scale)

    G, GT, P = qp.G, qp.G.T.tocsc(), qp.P
    eye_n = sp.eye(n, format="csc")

    def factor(rho_val):
        return spla.splu(sp.csc_matrix(P + _SIGMA * eye_n + rho_val * (GT @ G)))

    lu = factor(rho)
    rho_factored = rho

    x = np.zeros(n)
    s = np.maximum(qp.h, 0.0)
    w = np.zeros(m)
    w_prev = w
    Gx = np.zeros(m)
    lam = np.zeros(m)
    polish_trigger = max(100.0 * tol, 1e-4)
    last_polish_attempt = -_POLISH_BACKOFF
    polish_backoff = _POLISH_BACKOFF

    best = None  # (max residual, QpSolution fields) fallback at max_iter

    for it in range(1, max_iter + 1):
        rhs = _SIGMA * x - qp.c + rho * (GT @ (s - w))
        x = lu.solve(rhs)
        Gx = G @ x
        v = _ALPHA * Gx + (1.0 - _ALPHA) * s
        w_prev = w
        s = np.maximum(qp.h, v + w)
        w = w + v - s

        if it % _CHECK_EVERY == 0 or it == max_iter:
            lam = np.maximum(0.0, -rho * w)
            prim, dual, comp = _kkt_residuals(qp, x, lam, h_scale, c_scale)
            if residual_trace is not None:
                residual_trace.append((it, prim, dual))
            worst = max(prim, dual, comp)
            if best is None or worst < best[0]:
                best = (worst, x.copy(), lam.copy(), prim, dual)

            if prim <= tol and dual <= tol and comp <= tol:
                polished = _polish(qp, x, lam, tol, h_scale, c_scale)
                if polished is not None:
                    x, lam, prim, dual = polished
                return QpSolution(x, CONVERGED, it, prim, dual, lam)

            if worst <= polish_trigger and it - last_polish_attempt >= polish_backoff:
                last_polish_attempt = it
                polished = _polish(qp, x, lam, tol, h_scale, c_scale)
                if polished is not None:
                    x, lam, prim, dual = polished
                    return QpSolution(x, CONVERGED, it, prim, dual, lam)
                # each failure doubles the gap so stubborn problems spend
                # their time in ADMM iterations, not in doomed re-polishes
                polish_backoff = min(2 * polish_backoff, 1600)

            if _is_infeasible_suspected(qp, w, w_prev):
                return QpSolution(x, INFEASIBLE_SUSPECTED, it, prim, dual, lam)

            if it % _ADAPT_EVERY == 0 and prim > 0 and dual > 0:
                rho_new = float(np.clip(rho * np.sqrt(prim / dual), _RHO_MIN, _RHO_MAX))
                rho = rho_new
                if not (1 / _RHO_REFACTOR_BAND < rho / rho_factored < _RHO_REFACTOR_BAND):
                    # rescale the dual to keep lambda = -rho*w continuous
                    w = w * (rho_factored / rho)
                    lu = factor(rho)
                    rho_factored = rho
                else:
                    rho = rho_factored

    _, x, lam, prim, dual = best
    return QpSolution(x, MAX_ITERATIONS, max_iter, prim, dual, lam)


def _is_infeasible_suspected(qp: QuadraticProgram, w, w_prev) -> bool:
    """Farkas-style certificate test: lambda >= 0, G'lambda = 0, h'lambda > 0."""
    d = -(w - w_prev)
    scale = float(np.abs(d).max())
    if scale <= 1e-12:
        return False
    d = d / scale
    if d.min() < -1e-6:
        return False
    if float(qp.h @ d) <= 1e-6:
        return False
    return float(np.abs(qp.G.T @ d).max()) <= 1e-6
