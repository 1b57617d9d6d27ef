"""Learn the safety value function from a partitioned demonstration corpus.

The training problem is a convex QP over z = (theta, b, xi):

    minimize    0.5 * ||h||^2 + C * sum_j xi_j
    subject to  h(x_i) >= bound_i                        (safe points)
                h(x_j) <= r_f_j + xi_j                   (unsafe points)
                xi_j   >= epsilon_slack                  (one per unsafe point)
                h(x_k) >= r_b_k                          (semisafe points)
                <grad h(x_k), f + g u_k> + alpha h(x_k) >= gamma_dyn
                                                         (semisafe points)

with h linear in (theta, b), so every row is affine in z. ||h||^2 is the RKHS
seminorm theta' K theta (l2 on theta as a fallback); the bias is unpenalized.

Slack variables exist only on the unsafe rows. A failure trajectory labels all
of its points unsafe, including any stretch that retraces a genuinely safe
path; where safe or semisafe evidence pins h up, the optimizer pays C * xi to
override the failure label instead of bending h. Credit assignment reads the
result off the learned function: unsafe points with h at or below the credit
threshold caused the failure, the rest are absolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import dynamics, rbf
from .demonstrations import (
    DemoCorpus,
    PartitionedPoints,
    partition,
    subsample_corpus,
)
from .qpsolver import QPSolution, QPSolverContract, constraint_residual, default_solver

CAUSED_FAILURE = "caused_failure"
ABSOLVED = "absolved"

NORMS = ("rkhs", "l2_theta")
SAFE_BOUND_MODES = ("per_point", "constant")


class LearnError(ValueError):
    """Raised when the training problem cannot be assembled."""


@dataclass
class LearnConfig:
    """Hyperparameters of the training QP. Defaults follow the reference
    experiment: C = 1, gamma_dyn = 0.1, alpha = 1."""

    C: float = 1.0
    gamma_dyn: float = 0.1
    alpha_gain: float = 1.0
    sigma: float = 0.1
    max_centers: int = 150
    norm: str = "rkhs"
    epsilon_slack: float = 0.0
    apply_dyn_to_safe: bool = False
    # "per_point": each safe/semisafe point is bounded below by its own demo's
    # reward; "constant": use r_s_value / r_b_value for every point.
    safe_bound_mode: str = "per_point"
    r_s_value: float = 1.0
    r_b_value: float = 0.0
    credit_threshold: float = 0.0
    max_points_per_demo: int = 200
    # 1e-8 leaves the Gram matrix near-singular (cond ~ 1e9) on clustered
    # trajectory centers; 1e-6 conditions it without visibly moving the optimum
    gram_jitter: float = 1e-6
    feasibility_tol: float = 1e-6

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.epsilon_slack < 0:
            raise ValueError(f"epsilon_slack must be >= 0, got {self.epsilon_slack}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.safe_bound_mode not in SAFE_BOUND_MODES:
            raise ValueError(
                f"safe_bound_mode must be one of {SAFE_BOUND_MODES}, "
                f"got {self.safe_bound_mode!r}"
            )


@dataclass(frozen=True)
class RowTag:
    kind: str  # safe_lb | unsafe_ub | slack_lb | semisafe_lb | dyn_lb
    demo_id: str
    t_index: int


@dataclass
class LearnProblem:
    """Assembled QP: minimize 0.5 z'Pz + q'z s.t. G z <= h_ub, z = (theta, b, xi)."""

    centers: np.ndarray
    sigma: float
    P: np.ndarray
    q: np.ndarray
    G: np.ndarray
    h_ub: np.ndarray
    row_tags: List[RowTag]
    # unsafe point (demo_id, t_index) -> xi column index in z
    slack_index: Dict[Tuple[str, int], int]
    n_theta: int
    n_slack: int
    config: LearnConfig
    parts: PartitionedPoints = field(repr=False)

    @property
    def n_vars(self) -> int:
        return self.n_theta + 1 + self.n_slack


@dataclass
class LearnResult:
    model: rbf.SafetyModel
    slacks: np.ndarray
    slack_index: Dict[Tuple[str, int], int]
    objective_value: float
    solver_status: str  # optimal | failed
    residuals: float
    credit: Dict[Tuple[str, int], str]
    diagnostics: str = ""


def _psd_check(P_theta: np.ndarray) -> None:
    try:
        np.linalg.cholesky(P_theta)
    except np.linalg.LinAlgError:
        raise LearnError(
            "objective Gram matrix is not positive definite after jitter; "
            "try norm='l2_theta' or a larger sigma"
        ) from None


def assemble(corpus: DemoCorpus, cfg: LearnConfig) -> LearnProblem:
    """Build the training QP from a corpus.

    Constraint rows are emitted in a fixed order (safe, unsafe, slack bounds,
    semisafe value, semisafe dynamics) so assembly is deterministic.
    """
    model_dyn = dynamics.get_model(corpus.dynamics)
    parts = partition(subsample_corpus(corpus, cfg.max_points_per_demo))
    if not parts.safe and not parts.unsafe:
        raise LearnError("nothing to learn: corpus has no safe and no unsafe points")

    all_states = np.array([p.x for p in parts.safe + parts.semisafe + parts.unsafe])
    centers = rbf.select_centers(all_states, cfg.max_centers)
    n_theta = centers.shape[0]
    n_slack = len(parts.unsafe)
    n_vars = n_theta + 1 + n_slack
    b_col = n_theta  # column of the bias in z

    rows: List[np.ndarray] = []
    ubs: List[float] = []
    tags: List[RowTag] = []

    def emit(row: np.ndarray, ub: float, tag: RowTag) -> None:
        rows.append(row)
        ubs.append(ub)
        tags.append(tag)

    def value_row(phi_row: np.ndarray) -> np.ndarray:
        # coefficients of h(x) = phi_row . theta + b in z
        row = np.zeros(n_vars)
        row[:n_theta] = phi_row
        row[b_col] = 1.0
        return row

    def dyn_row(point) -> np.ndarray:
        # <grad h(x), f(x) + g(x) u> + alpha * h(x) is affine in (theta, b):
        # theta_i coefficient: grad phi_i(x) . v + alpha * phi_i(x); b: alpha.
        v = model_dyn.f(point.x) + model_dyn.g(point.x) @ point.u
        gf = rbf.grad_features(point.x, centers, cfg.sigma) @ v
        pf = rbf.features(point.x[None, :], centers, cfg.sigma)[0]
        row = np.zeros(n_vars)
        row[:n_theta] = gf + cfg.alpha_gain * pf
        row[b_col] = cfg.alpha_gain
        return row

    per_point = cfg.safe_bound_mode == "per_point"

    for p in parts.safe:
        bound = p.r if per_point else cfg.r_s_value
        # h(x_i) >= bound  ->  -h(x_i) <= -bound
        emit(-value_row(rbf.features(p.x[None, :], centers, cfg.sigma)[0]), -bound,
             RowTag("safe_lb", p.demo_id, p.t_index))

    slack_index: Dict[Tuple[str, int], int] = {}
    for j, p in enumerate(parts.unsafe):
        col = n_theta + 1 + j
        slack_index[(p.demo_id, p.t_index)] = col
        # h(x_j) - xi_j <= r_f
        row = value_row(rbf.features(p.x[None, :], centers, cfg.sigma)[0])
        row[col] = -1.0
        emit(row, p.r, RowTag("unsafe_ub", p.demo_id, p.t_index))
    for j, p in enumerate(parts.unsafe):
        col = n_theta + 1 + j
        # xi_j >= epsilon_slack
        row = np.zeros(n_vars)
        row[col] = -1.0
        emit(row, -cfg.epsilon_slack, RowTag("slack_lb", p.demo_id, p.t_index))

    for p in parts.semisafe:
        bound = p.r if per_point else cfg.r_b_value
        emit(-value_row(rbf.features(p.x[None, :], centers, cfg.sigma)[0]), -bound,
             RowTag("semisafe_lb", p.demo_id, p.t_index))
    for p in parts.semisafe:
        # q(x_k, u_k) >= gamma_dyn
        emit(-dyn_row(p), -cfg.gamma_dyn, RowTag("dyn_lb", p.demo_id, p.t_index))
    if cfg.apply_dyn_to_safe:
        for p in parts.safe:
            emit(-dyn_row(p), -cfg.gamma_dyn, RowTag("dyn_lb", p.demo_id, p.t_index))

    P = np.zeros((n_vars, n_vars))
    if cfg.norm == "rkhs":
        K = rbf.gram(centers, cfg.sigma) + cfg.gram_jitter * np.eye(n_theta)
        P[:n_theta, :n_theta] = K
    else:
        P[:n_theta, :n_theta] = np.eye(n_theta)
    _psd_check(P[:n_theta, :n_theta])

    q = np.zeros(n_vars)
    q[n_theta + 1 :] = cfg.C

    return LearnProblem(
        centers=centers,
        sigma=cfg.sigma,
        P=P,
        q=q,
        G=np.array(rows) if rows else np.zeros((0, n_vars)),
        h_ub=np.array(ubs),
        row_tags=tags,
        slack_index=slack_index,
        n_theta=n_theta,
        n_slack=n_slack,
        config=cfg,
        parts=parts,
    )


def solve(problem: LearnProblem, solver: Optional[QPSolverContract] = None) -> LearnResult:
    """Solve the assembled QP and package the learned model.

    With epsilon_slack = 0 the unsafe rows can always be satisfied by their
    slacks, so infeasibility can only come from conflicting hard (safe /
    semisafe / dynamics) rows; that surfaces as solver_status "failed".
    """
    if solver is None:
        solver = default_solver()
    sol: QPSolution = solver.solve(problem.P, problem.q, problem.G, problem.h_ub)
    cfg = problem.config
    if sol.z is None:
        model = rbf.SafetyModel(
            centers=problem.centers,
            theta=np.zeros(problem.n_theta),
            bias=0.0,
            sigma=problem.sigma,
        )
        return LearnResult(
            model=model,
            slacks=np.zeros(problem.n_slack),
            slack_index=dict(problem.slack_index),
            objective_value=float("nan"),
            solver_status="failed",
            residuals=float("inf"),
            credit={},
            diagnostics=sol.message,
        )
    z = sol.z
    theta = z[: problem.n_theta]
    bias = float(z[problem.n_theta])
    slacks = z[problem.n_theta + 1 :].copy()
    model = rbf.SafetyModel(
        centers=problem.centers, theta=theta, bias=bias, sigma=problem.sigma
    )
    residual = constraint_residual(problem.G, problem.h_ub, z)
    status = "optimal" if sol.status == "optimal" and residual <= cfg.feasibility_tol else "failed"
    result = LearnResult(
        model=model,
        slacks=slacks,
        slack_index=dict(problem.slack_index),
        objective_value=sol.objective,
        solver_status=status,
        residuals=residual,
        credit={},
        diagnostics=sol.message,
    )
    return assign_credit(result, problem.parts, cfg.credit_threshold)


def assign_credit(
    result: LearnResult,
    parts: PartitionedPoints,
    credit_threshold: float = 0.0,
) -> LearnResult:
    """Label each unsafe point by what the learned h says about it.

    h at or below the threshold: the point caused the failure. Above: its
    constraint was slacked away because safe evidence dominated, so it is
    absolved. No human labeling enters anywhere.
    """
    credit: Dict[Tuple[str, int], str] = {}
    if parts.unsafe:
        xs = np.array([p.x for p in parts.unsafe])
        values = rbf.evaluate_batch(result.model, xs)
        for p, h_val in zip(parts.unsafe, values):
            credit[(p.demo_id, p.t_index)] = (
                CAUSED_FAILURE if h_val <= credit_threshold else ABSOLVED
            )
    result.credit = credit
    return result


def learn(
    corpus: DemoCorpus,
    cfg: Optional[LearnConfig] = None,
    solver: Optional[QPSolverContract] = None,
) -> LearnResult:
    """partition -> select_centers -> assemble -> solve -> assign_credit."""
    if cfg is None:
        cfg = LearnConfig()
    problem = assemble(corpus, cfg)
    return solve(problem, solver)


def slack_identity_gap(result: LearnResult, problem: LearnProblem) -> float:
    """Max deviation from xi_j = max(0, h(x_j) - r_f_j) over unsafe points.

    At any optimum each slack sits exactly at the violation of its unsafe
    bound (it has a positive cost and nothing else touches it), so this gap
    doubles as a solver-quality diagnostic.
    """
    if problem.n_slack == 0:
        return 0.0
    gaps = []
    eps = problem.config.epsilon_slack
    for p in problem.parts.unsafe:
        col = problem.slack_index[(p.demo_id, p.t_index)]
        xi = result.slacks[col - problem.n_theta - 1]
        h_val = rbf.evaluate(result.model, p.x)
        gaps.append(abs(xi - max(eps, h_val - p.r)))
    return float(max(gaps))
