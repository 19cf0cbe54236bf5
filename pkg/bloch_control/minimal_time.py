"""Minimal-time search over final horizons.

A horizon ``T`` counts as feasible when the fixed-time solver drives the cost
down to ``reach_tol``. GPM is a local first-order method with a finite budget,
so an "infeasible" verdict is not a proof: the reported minimum is an upper
bound on the true minimal time.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .errors import InfeasibleAtTHi
from .gpm import FixedTimeProblem, IterationRecord, Termination, gpm_iterate, initial_controls
from .integrator import ControlGrid
from .models import GpmSettings, SweepSettings
from .settings import settings as env_settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRecord:
    T: float
    J_final: float
    iterations: int
    termination: Termination
    feasible: bool
    u_final: ControlGrid = field(repr=False)
    iteration_records: Tuple[IterationRecord, ...] = field(default=(), repr=False)


@dataclass
class SweepResult:
    mode: str
    T_min_estimate: float
    bracket: Tuple[Optional[float], float]
    reach_tol: float
    records: List[SweepRecord] = field(default_factory=list)

    @property
    def best(self) -> SweepRecord:
        return next(r for r in self.records if r.feasible and r.T == self.T_min_estimate)


def horizon_intervals(T: float, control_dt: Optional[float] = None, N: Optional[int] = None) -> int:
    """Control intervals for horizon T: a pinned N, else ceil(T / control_dt)."""
    if N is not None:
        return N
    dt = control_dt or env_settings.control_dt
    return max(1, math.ceil(T / dt - 1e-9))


def _solver_settings(gpm_settings: GpmSettings, reach_tol: float) -> GpmSettings:
    stop = gpm_settings.stop_at_cost
    return gpm_settings.model_copy(
        update={"stop_at_cost": reach_tol if stop is None else min(stop, reach_tol)}
    )


def _solve_horizon(
    problem: FixedTimeProblem,
    gpm_settings: GpmSettings,
    reach_tol: float,
    u_start: Optional[ControlGrid] = None,
) -> SweepRecord:
    u0 = u_start if u_start is not None else initial_controls(problem, gpm_settings)
    result = gpm_iterate(u0, problem, gpm_settings)
    feasible = result.J_final <= reach_tol
    logger.info(
        "horizon T=%g: J=%.3e after %d iterations (%s) -> %s",
        problem.T, result.J_final, result.iterations, result.termination.value,
        "feasible" if feasible else "not reached",
    )
    return SweepRecord(
        problem.T,
        result.J_final,
        result.iterations,
        result.termination,
        feasible,
        result.u_final,
        tuple(result.records),
    )


def find_minimal_time(
    template: FixedTimeProblem,
    sweep: SweepSettings,
    gpm_settings: GpmSettings,
    *,
    control_dt: Optional[float] = None,
    N: Optional[int] = None,
    substeps: Optional[int] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """Bisection on T, or an explicit list of horizons when ``sweep.grid`` is set."""
    solver = _solver_settings(gpm_settings, sweep.reach_tol)

    def problem_at(T: float) -> FixedTimeProblem:
        return template.with_horizon(T, horizon_intervals(T, control_dt, N), substeps)

    if sweep.grid is not None:
        return _grid_sweep(problem_at, sweep, solver, workers or env_settings.workers)

    top = _solve_horizon(problem_at(sweep.T_hi), solver, sweep.reach_tol)
    if not top.feasible:
        raise InfeasibleAtTHi(sweep.T_hi, top.J_final, sweep.reach_tol)

    records = [top]
    lo, hi, best = sweep.T_lo, sweep.T_hi, top
    for _ in range(sweep.bisect_iters):
        mid = 0.5 * (lo + hi)
        problem = problem_at(mid)
        warm = best.u_final.resample(mid, problem.N) if sweep.warm_start else None
        record = _solve_horizon(problem, solver, sweep.reach_tol, warm)
        records.append(record)
        if record.feasible:
            hi, best = mid, record
        else:
            lo = mid
    logger.info("bisection bracket [%g, %g], T_min <= %g", lo, hi, hi)
    return SweepResult("bisection", hi, (lo, hi), sweep.reach_tol, records)


def _grid_sweep(
    problem_at: Callable[[float], FixedTimeProblem],
    sweep: SweepSettings,
    solver: GpmSettings,
    workers: int,
) -> SweepResult:
    horizons = sorted(set(sweep.grid or []), reverse=True)
    problems = [problem_at(T) for T in horizons]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_horizon, p, solver, sweep.reach_tol) for p in problems]
            records = [f.result() for f in futures]
    else:
        records = []
        last_feasible: Optional[SweepRecord] = None
        for problem in problems:
            warm = None
            if sweep.warm_start and last_feasible is not None:
                warm = last_feasible.u_final.resample(problem.T, problem.N)
            record = _solve_horizon(problem, solver, sweep.reach_tol, warm)
            records.append(record)
            if record.feasible:
                last_feasible = record

    feasible = [r.T for r in records if r.feasible]
    if not feasible:
        raise InfeasibleAtTHi(records[0].T, records[0].J_final, sweep.reach_tol)
    t_min = min(feasible)
    below = [r.T for r in records if not r.feasible and r.T < t_min]
    return SweepResult("grid", t_min, (max(below) if below else None, t_min), sweep.reach_tol, records)
