"""Gradient projection method for one fixed-horizon problem.

Each iteration moves the controls along the switching functions, projects the
result onto the box ``Q``, and mixes it with the current controls through a
line-searched ``beta`` in (0, 1]. Both endpoints of the mix are feasible and
``Q`` is convex, so iterates never leave ``Q``.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import simpson

from .constants import BOUNDS_TOL
from .dynamics import switching_functions, terminal_adjoint
from .errors import ControlOutOfBounds
from .integrator import (
    AdjointTrajectory,
    ControlGrid,
    Trajectory,
    default_substeps,
    final_states,
    integrate_adjoint,
    integrate_forward,
)
from .models import ControlBounds, GpmSettings, SystemParams
from .quantum_state import BlochVector

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi


class Termination(str, Enum):
    EPSILON_REACHED = "EpsilonReached"
    NO_IMPROVING_BETA = "NoImprovingBeta"
    MAX_ITERS = "MaxIters"
    TARGET_REACHED = "TargetReached"


@dataclass(frozen=True)
class FixedTimeProblem:
    params: SystemParams
    bounds: ControlBounds
    x0: BlochVector
    x_target: BlochVector
    T: float
    N: int
    substeps: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got T={self.T}")
        if self.N < 1:
            raise ValueError(f"need at least one control interval, got N={self.N}")
        if self.substeps is None:
            object.__setattr__(self, "substeps", default_substeps(self.T / self.N))
        elif self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def with_horizon(self, T: float, N: int, substeps: Optional[int] = None) -> "FixedTimeProblem":
        return dataclasses.replace(self, T=T, N=N, substeps=substeps)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    cost: float
    beta: Optional[float]
    accepted: bool


@dataclass(frozen=True)
class GradientResult:
    """Interval-averaged gradient density; ``dJ = sum(gv dv + gn dn) * dt``."""

    gv: FloatArray = field(repr=False)
    gn: FloatArray = field(repr=False)
    trajectory: Trajectory = field(repr=False)
    adjoint: AdjointTrajectory = field(repr=False)


@dataclass(frozen=True)
class GradientCheck:
    max_rel_error: float
    compared: int


@dataclass
class OptResult:
    u_final: ControlGrid
    J_history: List[float]
    iterations: int
    termination: Termination
    final_trajectory: Trajectory
    records: List[IterationRecord] = field(default_factory=list)
    gradient_check: Optional[GradientCheck] = None

    @property
    def J_final(self) -> float:
        return self.J_history[-1]


# Constraints -----------------------------------------------------------------

def project_controls(u: ControlGrid, bounds: ControlBounds) -> ControlGrid:
    return u.with_values(
        np.clip(u.v, bounds.v_min, bounds.v_max),
        np.clip(u.n, 0.0, bounds.n_max),
    )


def in_bounds(u: ControlGrid, bounds: ControlBounds, tol: float = BOUNDS_TOL) -> bool:
    return bool(
        np.all(u.v >= bounds.v_min - tol)
        and np.all(u.v <= bounds.v_max + tol)
        and np.all(u.n >= -tol)
        and np.all(u.n <= bounds.n_max + tol)
    )


def _require_feasible(u: ControlGrid, bounds: ControlBounds, what: str) -> None:
    if not in_bounds(u, bounds):
        raise ControlOutOfBounds(
            f"{what} leaves Q: v in [{u.v.min():g}, {u.v.max():g}], n in [{u.n.min():g}, "
            f"{u.n.max():g}] vs bounds {bounds.model_dump()}"
        )


def initial_controls(problem: FixedTimeProblem, settings: GpmSettings) -> ControlGrid:
    """Constant seed; a non-zero coherent part breaks the x1 = x2 = 0 symmetry."""
    b = problem.bounds
    v = min(max(settings.v_seed, b.v_min), b.v_max)
    n = min(max(settings.n_seed, 0.0), b.n_max)
    return ControlGrid.constant(problem.T, problem.N, v, n)


# Costs and gradient ----------------------------------------------------------

def evaluate_costs(problem: FixedTimeProblem, v: NDArray, n: NDArray) -> FloatArray:
    """J for a stack of controls of shape (B, N)."""
    x_T = final_states(problem.x0, v, n, problem.T, problem.params, problem.substeps)
    diff = x_T - problem.x_target.as_array()
    return np.einsum("bi,bi->b", diff, diff)


def evaluate_cost(problem: FixedTimeProblem, u: ControlGrid) -> float:
    return float(evaluate_costs(problem, u.v[None, :], u.n[None, :])[0])


def compute_gradient(u: ControlGrid, problem: FixedTimeProblem) -> GradientResult:
    """Gradient of J from the forward pass, the terminal condition and the backward pass.

    Each component is the switching function averaged over its control interval
    (Simpson quadrature on the RK4 substep nodes of x and p), with the sign of
    the gradient, so ``-gv`` and ``-gn`` are the ascent directions of H.
    """
    traj = integrate_forward(problem.x0, u, problem.params, problem.substeps, keep_nodes=True)
    p_T = terminal_adjoint(traj.final_state, problem.x_target)
    adj = integrate_adjoint(p_T, u, problem.params, problem.substeps, keep_nodes=True)
    assert traj.nodes is not None and adj.nodes is not None

    k_v, k_n = switching_functions(adj.nodes, traj.nodes, problem.params)
    h = u.dt / traj.substeps
    gv = -simpson(k_v, dx=h, axis=-1) / u.dt
    gn = -simpson(k_n, dx=h, axis=-1) / u.dt
    return GradientResult(gv, gn, traj, adj)


def check_gradient(
    u: ControlGrid,
    problem: FixedTimeProblem,
    step: float = 1e-4,
    components: Optional[Sequence[int]] = None,
    floor: Optional[float] = None,
) -> GradientCheck:
    """Compare the adjoint gradient with central differences of J per control value.

    ``components`` indexes the stacked vector (v[0..N-1], n[0..N-1]); all by default.
    Components whose finite-difference derivative is below ``floor`` are skipped;
    the default floor is ``max(1e-10, 1e-3 * max|fd|)`` so that zero crossings of
    the switching functions, where rounding noise dominates, do not count.
    """
    grad = compute_gradient(u, problem)
    adjoint = np.concatenate([grad.gv, grad.gn]) * u.dt
    idx = np.arange(2 * u.N) if components is None else np.asarray(components, dtype=int)

    base = np.concatenate([u.v, u.n])
    plus = np.tile(base, (idx.size, 1))
    minus = plus.copy()
    rows = np.arange(idx.size)
    plus[rows, idx] += step
    minus[rows, idx] -= step
    j_plus = evaluate_costs(problem, plus[:, : u.N], plus[:, u.N :])
    j_minus = evaluate_costs(problem, minus[:, : u.N], minus[:, u.N :])
    fd = (j_plus - j_minus) / (2 * step)

    if floor is None:
        floor = max(1e-10, 1e-3 * float(np.max(np.abs(fd), initial=0.0)))
    mask = np.abs(fd) > floor
    if not np.any(mask):
        return GradientCheck(0.0, 0)
    rel = np.abs(adjoint[idx][mask] - fd[mask]) / np.abs(fd[mask])
    return GradientCheck(float(rel.max()), int(mask.sum()))


# Line search -----------------------------------------------------------------

def _mix(u: ControlGrid, u_pr: ControlGrid, beta: NDArray) -> Tuple[FloatArray, FloatArray]:
    b = np.asarray(beta, dtype=float)[..., None]
    return (1 - b) * u.v + b * u_pr.v, (1 - b) * u.n + b * u_pr.n


def _golden_section(
    f: Callable[[float], float], a: float, b: float, iters: int
) -> Tuple[float, float]:
    """Golden-section search on [a, b] with exactly ``iters`` evaluations of f; best point seen."""
    c = b - INV_PHI * (b - a)
    fc = f(c)
    if iters == 1:
        return c, fc
    d = a + INV_PHI * (b - a)
    fd = f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    for _ in range(iters - 2):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            if fc < best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            if fd < best[1]:
                best = (d, fd)
    return best


def line_search_beta(
    u: ControlGrid, u_pr: ControlGrid, problem: FixedTimeProblem, settings: GpmSettings
) -> Tuple[float, float]:
    """Minimize f(beta) = J((1 - beta) u + beta u_pr) over (0, 1].

    A uniform grid finds the basin (all grid points integrate in one batch), then
    golden-section steps refine inside the neighbouring grid points.
    """
    size = settings.beta_grid_size
    betas = np.arange(1, size + 1) / size
    v, n = _mix(u, u_pr, betas)
    costs = evaluate_costs(problem, v, n)
    k = int(np.argmin(costs))
    beta_star, j_star = float(betas[k]), float(costs[k])

    if settings.beta_refine_iters > 0:
        lo = betas[k - 1] if k > 0 else 0.0
        hi = betas[k + 1] if k + 1 < size else 1.0

        def f(beta: float) -> float:
            bv, bn = _mix(u, u_pr, np.array([beta]))
            return float(evaluate_costs(problem, bv, bn)[0])

        beta_ref, j_ref = _golden_section(f, float(lo), float(hi), settings.beta_refine_iters)
        if j_ref < j_star and beta_ref > 0:
            beta_star, j_star = beta_ref, j_ref
    return beta_star, j_star


# Iteration -------------------------------------------------------------------

def gpm_iterate(
    u0: ControlGrid, problem: FixedTimeProblem, settings: GpmSettings
) -> OptResult:
    _require_feasible(u0, problem.bounds, "initial control")
    if u0.N != problem.N or not math.isclose(u0.T, problem.T):
        raise ValueError(f"control grid {u0!r} does not match problem T={problem.T:g}, N={problem.N}")

    check = None
    if settings.gradient_check:
        check = check_gradient(u0, problem)
        logger.info("gradient pre-flight: max relative FD mismatch %.3e over %d components",
                    check.max_rel_error, check.compared)

    u = u0
    J = evaluate_cost(problem, u)
    history = [J]
    records = [IterationRecord(0, J, None, True)]
    termination = Termination.MAX_ITERS
    logger.info("GPM start: T=%g N=%d substeps=%s J0=%.6e", problem.T, problem.N, problem.substeps, J)

    iteration = 0
    for iteration in range(1, settings.max_iters + 1):
        grad = compute_gradient(u, problem)
        u_alpha = u.with_values(u.v - settings.alpha * grad.gv, u.n - settings.alpha * grad.gn)
        u_pr = project_controls(u_alpha, problem.bounds)
        beta, j_new = line_search_beta(u, u_pr, problem, settings)

        if j_new > J:
            records.append(IterationRecord(iteration, J, beta, False))
            termination = Termination.NO_IMPROVING_BETA
            break

        v, n = _mix(u, u_pr, np.array(beta))
        u = u.with_values(v, n)
        _require_feasible(u, problem.bounds, f"iterate {iteration}")
        j_prev, J = J, j_new
        history.append(J)
        records.append(IterationRecord(iteration, J, beta, True))
        logger.debug("GPM iter %d: J=%.6e beta=%.4f", iteration, J, beta)

        if abs(J - j_prev) < settings.epsilon:
            termination = Termination.EPSILON_REACHED
            break
        if settings.stop_at_cost is not None and J <= settings.stop_at_cost:
            termination = Termination.TARGET_REACHED
            break

    traj = integrate_forward(problem.x0, u, problem.params, problem.substeps)
    logger.info("GPM done: %s after %d iterations, J=%.6e", termination.value, iteration, J)
    return OptResult(u, history, iteration, termination, traj, records, check)
