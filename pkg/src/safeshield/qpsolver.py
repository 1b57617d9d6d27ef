"""Convex QP solver contract used by the learner.

Problem form: minimize 0.5 z' P z + q' z subject to A z <= b, with P positive
semidefinite. Two interchangeable backends:

  ClarabelSolver  interior-point (default): fast on this problem family and
                  bitwise reproducible run to run.
  OsqpSolver      ADMM with pinned settings; slower here but kept as an
                  alternative backend behind the same contract.

Constraint rows are normalized to unit norm before either backend sees them
(a pure re-scaling of the duals), and the returned solution is only reported
"optimal" once the residual verifies below the feasibility tolerance on the
original, unnormalized data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Tuple

import numpy as np
import scipy.sparse as sparse

FEASIBILITY_TOL = 1e-6


@dataclass
class QPSolution:
    z: Optional[np.ndarray]
    status: str  # "optimal" or "failed"
    objective: float
    residual: float  # max(A z - b, 0), 0 when all constraints hold
    message: str = ""
    duals: Optional[np.ndarray] = None


class QPSolverContract(Protocol):
    def solve(
        self, P: np.ndarray, q: np.ndarray, A: np.ndarray, b: np.ndarray
    ) -> QPSolution: ...


def constraint_residual(A: np.ndarray, b: np.ndarray, z: np.ndarray) -> float:
    """Worst violation of A z <= b (0 if feasible)."""
    if A.shape[0] == 0:
        return 0.0
    return float(np.maximum(A @ z - b, 0.0).max())


def _normalize_rows(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0.0] = 1.0
    return A / norms[:, None], b / norms


def _kkt_polish(
    P: np.ndarray,
    q: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    z0: np.ndarray,
    duals0: Optional[np.ndarray],
    max_rounds: int = 12,
) -> Optional[np.ndarray]:
    """Refine a near-optimal point to a certified KKT point.

    Starting from the solver's active-set guess, alternately solve the
    equality-constrained KKT system and repair the working set (add violated
    rows, drop rows with negative multipliers). The result is only returned
    when primal feasibility, dual signs, and stationarity all verify, which
    for a convex QP certifies global optimality; otherwise None.
    """
    n = q.shape[0]
    m = A.shape[0]
    if m == 0 or m + n > 4000:
        return None
    slack = b - A @ z0
    y = duals0 if duals0 is not None else np.zeros(m)
    active = y > np.maximum(slack, 1e-9)
    if not active.any():
        active = slack < 1e-7
    z = z0
    for _ in range(max_rounds):
        idx = np.flatnonzero(active)
        A_act = A[idx]
        k = idx.size
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = P
        kkt[:n, n:] = A_act.T
        kkt[n:, :n] = A_act
        rhs = np.concatenate([-q, b[idx]])
        try:
            sol = np.linalg.solve(kkt, rhs)
            if not np.all(np.isfinite(sol)) or (
                np.linalg.norm(kkt @ sol - rhs) > 1e-6 * max(1.0, np.linalg.norm(rhs))
            ):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            if not np.all(np.isfinite(sol)):
                return None
        z = sol[:n]
        nu = sol[n:]
        violations = A @ z - b
        to_add = (~active) & (violations > 1e-10)
        negative = nu < -1e-10
        if not to_add.any() and not negative.any():
            break
        if to_add.sum() > 300:
            return None  # seed too far from the optimum to refine cheaply
        if to_add.any():
            active |= to_add
        else:
            active[idx[negative]] = False
    else:
        return None
    # certify: feasible, dual-feasible, stationary -> optimal for a convex QP
    if constraint_residual(A, b, z) > 1e-9:
        return None
    grad = P @ z + q + A[np.flatnonzero(active)].T @ nu
    if np.linalg.norm(grad) > 1e-6 * max(1.0, np.linalg.norm(q)):
        return None
    return z


def _package(
    P: np.ndarray,
    q: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    z: Optional[np.ndarray],
    raw_status: str,
    ok: bool,
    tol: float,
    duals: Optional[np.ndarray] = None,
) -> QPSolution:
    if z is None or not ok:
        return QPSolution(
            z=None,
            status="failed",
            objective=float("nan"),
            residual=float("inf"),
            message=raw_status,
            duals=duals,
        )
    residual = constraint_residual(A, b, z)
    objective = float(0.5 * z @ (P @ z) + q @ z)
    if residual > tol:
        return QPSolution(
            z=z,
            status="failed",
            objective=objective,
            residual=residual,
            message=f"{raw_status}; residual {residual:.3e} exceeds tolerance {tol:g}",
            duals=duals,
        )
    return QPSolution(
        z=z,
        status="optimal",
        objective=objective,
        residual=residual,
        message=raw_status,
        duals=duals,
    )


class ClarabelSolver:
    """Interior-point backend (Clarabel). Deterministic: direct factorizations,
    no timing-dependent heuristics."""

    def __init__(self, feasibility_tol: float = FEASIBILITY_TOL):
        self.feasibility_tol = feasibility_tol

    def solve(
        self, P: np.ndarray, q: np.ndarray, A: np.ndarray, b: np.ndarray
    ) -> QPSolution:
        import clarabel

        n = q.shape[0]
        if A.shape[0] == 0:
            A = np.zeros((1, n))
            b = np.array([1.0])  # vacuous row keeps the cone nonempty
        A_n, b_n = _normalize_rows(A, b)
        # scaling the objective does not move the optimum but conditions the
        # interior-point iteration when the slack penalty dominates
        obj_scale = max(1.0, float(np.abs(q).max()))
        P_sp = sparse.csc_matrix(sparse.triu(sparse.csc_matrix(P / obj_scale)))
        A_sp = sparse.csc_matrix(A_n)
        cones = [clarabel.NonnegativeConeT(A_sp.shape[0])]
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        # default 1e-8 static regularization stalls at "AlmostSolved" on the
        # slack-heavy training QPs; 1e-7 reaches full tolerance
        settings.static_regularization_constant = 1e-7
        solver = clarabel.DefaultSolver(P_sp, q / obj_scale, A_sp, b_n, cones, settings)
        sol = solver.solve()
        status = str(sol.status)
        ok = status in ("Solved", "AlmostSolved")
        z = np.asarray(sol.x, dtype=float) if ok else None
        duals = np.asarray(sol.z, dtype=float) if ok else None
        message = f"clarabel: {status}"
        if z is not None:
            polished = _kkt_polish(P, q, A_n, b_n, z, duals)
            if polished is not None:
                z = polished
                message += "+polish"
        return _package(P, q, A, b, z, message, ok, self.feasibility_tol, duals)


class OsqpSolver:
    """OSQP (ADMM) backend with settings pinned for reproducibility."""

    def __init__(
        self,
        eps: float = 1e-9,
        max_iter: int = 400_000,
        feasibility_tol: float = FEASIBILITY_TOL,
    ):
        self.eps = eps
        self.max_iter = max_iter
        self.feasibility_tol = feasibility_tol

    def solve(
        self, P: np.ndarray, q: np.ndarray, A: np.ndarray, b: np.ndarray
    ) -> QPSolution:
        import osqp

        n = q.shape[0]
        if A.shape[0] == 0:
            A = np.zeros((1, n))
            b = np.array([1.0])
        A_n, b_n = _normalize_rows(A, b)
        P_sp = sparse.csc_matrix(sparse.triu(sparse.csc_matrix(P)))
        A_sp = sparse.csc_matrix(A_n)
        lower = np.full(A_sp.shape[0], -np.inf)
        prob = osqp.OSQP()
        prob.setup(
            P=P_sp,
            q=q,
            A=A_sp,
            l=lower,
            u=b_n,
            verbose=False,
            eps_abs=self.eps,
            eps_rel=self.eps,
            eps_prim_inf=1e-12,
            eps_dual_inf=1e-12,
            max_iter=self.max_iter,
            polishing=1,
            # fixed interval: the automatic choice is timing-based and would
            # break run-to-run determinism
            adaptive_rho_interval=25,
        )
        res = prob.solve()
        status = str(res.info.status)
        ok = res.x is not None and "solved" in status
        z = np.asarray(res.x, dtype=float) if ok else None
        duals = np.asarray(res.y, dtype=float) if ok and res.y is not None else None
        message = f"osqp: {status}"
        if z is not None and constraint_residual(A, b, z) > self.feasibility_tol:
            polished = _kkt_polish(P, q, A_n, b_n, z, duals)
            if polished is not None:
                z = polished
                message += "+polish"
        return _package(P, q, A, b, z, message, ok, self.feasibility_tol, duals)


def default_solver() -> ClarabelSolver:
    return ClarabelSolver()
