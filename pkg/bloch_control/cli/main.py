from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config import RunConfig, load_run_config
from ..errors import BlochControlError, ConfigError, GradientMismatch
from ..gpm import GradientCheck, check_gradient, gpm_iterate, initial_controls
from ..integrator import ControlGrid, cost, integrate_forward
from ..minimal_time import SweepRecord, find_minimal_time
from ..models import OptimizationSummary, SimulationSummary, SweepReport, SweepReportRecord
from ..settings import settings
from .files import (
    read_controls_csv,
    write_controls_csv,
    write_convergence_csv,
    write_json,
    write_trajectory_csv,
)

GRAD_CHECK_TOL = 1e-4

# argparse dest -> dotted config key
FLAG_KEYS = {
    "T": "grid.T",
    "N": "grid.N",
    "substeps": "grid.substeps",
    "seed": "seed",
    "output_dir": "output_dir",
    "controls": "controls.file",
    "v": "controls.v",
    "n": "controls.n",
    "alpha": "gpm.alpha",
    "max_iters": "gpm.max_iters",
    "v_seed": "gpm.v_seed",
    "T_hi": "sweep.T_hi",
    "T_lo": "sweep.T_lo",
    "bisect_iters": "sweep.bisect_iters",
    "reach_tol": "sweep.reach_tol",
    "grid": "sweep.grid",
}


def _output_dir(config: RunConfig) -> Path:
    if not config.output_dir:
        raise ConfigError("--output-dir is required for this command")
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _horizon_dir(T: float) -> str:
    return f"T_{T:.10g}"


# Simulation -----------------------------------------------------------------

def run_simulate(config: RunConfig) -> SimulationSummary:
    """Integrate the Bloch system under constant or file-supplied controls."""
    out = _output_dir(config)
    if config.controls.file:
        u = read_controls_csv(config.controls.file, config.grid.T)
    else:
        u = ControlGrid.constant(config.grid.T, config.N, config.controls.v, config.controls.n)
    problem = config.problem().with_horizon(u.T, u.N, config.grid.substeps)

    traj = integrate_forward(problem.x0, u, problem.params, problem.substeps)
    write_trajectory_csv(out / "trajectory.csv", traj, u)
    summary = SimulationSummary(
        J_final=cost(traj, problem.x_target),
        norm_max=traj.max_norm,
        T=u.T,
        N=u.N,
        substeps=traj.substeps,
        params=problem.params,
    )
    write_json(out / "summary.json", summary)
    return summary


# Optimization ---------------------------------------------------------------

def run_optimize(config: RunConfig) -> OptimizationSummary:
    """One fixed-time GPM solve from the seeded initial control."""
    out = _output_dir(config)
    problem = config.problem()
    result = gpm_iterate(initial_controls(problem, config.gpm), problem, config.gpm)

    write_controls_csv(out / "controls.csv", result.u_final)
    write_trajectory_csv(out / "trajectory.csv", result.final_trajectory, result.u_final)
    write_convergence_csv(out / "convergence.csv", result.records)
    check = result.gradient_check
    if check is not None:
        print(f"gradient pre-flight: max relative FD mismatch {check.max_rel_error:.3e} "
              f"over {check.compared} components")
    summary = OptimizationSummary(
        J_final=cost(result.final_trajectory, problem.x_target),
        iterations=result.iterations,
        termination=result.termination.value,
        T=problem.T,
        N=problem.N,
        substeps=result.final_trajectory.substeps,
        gradient_check_max_rel_error=None if check is None else check.max_rel_error,
    )
    write_json(out / "summary.json", summary)
    return summary


# Minimal-time sweep ---------------------------------------------------------

def _write_horizon(out: Path, config: RunConfig, record: SweepRecord) -> str:
    rel = Path(_horizon_dir(record.T))
    problem = config.problem().with_horizon(record.T, record.u_final.N, config.grid.substeps)
    traj = integrate_forward(problem.x0, record.u_final, problem.params, problem.substeps)
    write_controls_csv(out / rel / "controls.csv", record.u_final)
    write_trajectory_csv(out / rel / "trajectory.csv", traj, record.u_final)
    write_convergence_csv(out / rel / "convergence.csv", record.iteration_records)
    write_json(
        out / rel / "summary.json",
        OptimizationSummary(
            J_final=cost(traj, problem.x_target),
            iterations=record.iterations,
            termination=record.termination.value,
            T=record.T,
            N=record.u_final.N,
            substeps=traj.substeps,
        ),
    )
    return (rel / "controls.csv").as_posix()


def run_sweep(config: RunConfig, workers: Optional[int] = None) -> SweepReport:
    """Minimal-time search; per-horizon artifacts go to ``T_<value>/``."""
    if config.sweep is None:
        raise ConfigError("sweep: section is required for the sweep command (or pass --T-hi / --grid)")
    out = _output_dir(config)
    result = find_minimal_time(
        config.problem(),
        config.sweep,
        config.gpm,
        control_dt=config.grid.control_dt,
        N=config.grid.N,
        substeps=config.grid.substeps,
        workers=workers,
    )
    report = SweepReport(
        mode=result.mode,
        t_min_estimate=result.T_min_estimate,
        bracket=result.bracket,
        reach_tol=result.reach_tol,
        records=[
            SweepReportRecord(
                T=r.T,
                J_final=r.J_final,
                iterations=r.iterations,
                termination=r.termination.value,
                feasible=r.feasible,
                control_file=_write_horizon(out, config, r),
            )
            for r in result.records
        ],
    )
    write_json(out / "sweep.json", report)
    print(f"T_min <= {result.T_min_estimate:.10g} (bracket {result.bracket}); "
          "upper bound relative to the optimizer budget")
    return report


# Gradient check -------------------------------------------------------------

def run_grad_check(config: RunConfig, random_controls: bool = True) -> GradientCheck:
    """Adjoint gradient vs central differences at seeded random (or seed) controls."""
    problem = config.problem()
    if random_controls:
        rng = np.random.default_rng(config.seed)
        b = problem.bounds
        u = ControlGrid(
            problem.T,
            rng.uniform(b.v_min, b.v_max, problem.N),
            rng.uniform(0.0, b.n_max, problem.N),
        )
    else:
        u = initial_controls(problem, config.gpm)
    check = check_gradient(u, problem)
    print(f"max relative FD mismatch {check.max_rel_error:.3e} over {check.compared} components")
    return check


# Entry point ----------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, output: bool) -> None:
    parser.add_argument("--config", required=True, help="Run configuration (JSON)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a config key, e.g. gpm.alpha=500 (value parsed as JSON)")
    parser.add_argument("--T", type=float, help="Final time")
    parser.add_argument("--N", type=int, help="Number of control intervals")
    parser.add_argument("--substeps", type=int, help="RK4 steps per control interval")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--log-level", help="Logging level (default from BLOCH_CONTROL_LOG_LEVEL)")
    if output:
        parser.add_argument("--output-dir", required=True, help="Directory for CSV/JSON artifacts")


def _add_gpm(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, help="Gradient step scale")
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--v-seed", type=float, help="Constant coherent control of the initial guess")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bloch-control",
        description="Minimal-time coherent and incoherent control of a two-level open quantum system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Integrate the Bloch equations for given controls")
    _add_common(simulate, output=True)
    simulate.add_argument("--controls", help="Control CSV (t,v,n) emitted by optimize")
    simulate.add_argument("--v", type=float, help="Constant coherent control")
    simulate.add_argument("--n", type=float, help="Constant incoherent control")

    optimize = sub.add_parser("optimize", help="Fixed-time GPM solve")
    _add_common(optimize, output=True)
    _add_gpm(optimize)
    optimize.add_argument("--gradient-check", action="store_true",
                          help="Finite-difference check of the gradient before iterating")

    sweep = sub.add_parser("sweep", help="Minimal-time search over final times")
    _add_common(sweep, output=True)
    _add_gpm(sweep)
    sweep.add_argument("--grid", type=float, nargs="+", metavar="T", help="Explicit horizons")
    sweep.add_argument("--T-hi", type=float, dest="T_hi")
    sweep.add_argument("--T-lo", type=float, dest="T_lo")
    sweep.add_argument("--bisect-iters", type=int)
    sweep.add_argument("--reach-tol", type=float)
    sweep.add_argument("--workers", type=int, help="Process pool size for grid mode")

    grad = sub.add_parser("grad-check", help="Compare adjoint gradient with finite differences")
    _add_common(grad, output=False)
    grad.add_argument("--at-seed", action="store_true",
                      help="Check at the seed control instead of random controls")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in args.overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "gradient_check", False):
        overrides["gpm.gradient_check"] = True
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_run_config(args.config, collect_overrides(args))
        if args.command == "simulate":
            run_simulate(config)
        elif args.command == "optimize":
            run_optimize(config)
        elif args.command == "sweep":
            run_sweep(config, workers=args.workers)
        elif args.command == "grad-check":
            check = run_grad_check(config, random_controls=not args.at_seed)
            if check.max_rel_error > GRAD_CHECK_TOL:
                raise GradientMismatch(
                    f"gradient mismatch {check.max_rel_error:.3e} exceeds {GRAD_CHECK_TOL:g}"
                )
    except BlochControlError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
