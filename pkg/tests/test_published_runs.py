"""Full-size runs of the shipped configurations. Minutes each; run with ``pytest -m slow``."""
import math
from pathlib import Path

import numpy as np
import pytest

from bloch_control.config import load_run_config
from bloch_control.gpm import gpm_iterate, initial_controls
from bloch_control.minimal_time import find_minimal_time, horizon_intervals
from bloch_control.models import SweepSettings

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def _length_floor(T: float, gamma: float, target_length: float) -> float:
    """Lower bound on J: with n <= 1 the Bloch vector length from |x0| = 1 stays above
    -1/3 + (4/3) exp(-3 gamma T), so the target can be no closer than that minus its length."""
    shortest = -1.0 / 3.0 + 4.0 / 3.0 * math.exp(-3.0 * gamma * T)
    return max(shortest - target_length, 0.0) ** 2


@pytest.mark.parametrize("T", [400.0, 200.0])
def test_relaxation_horizons_reach_the_target(T):
    config = load_run_config(CONFIGS / "relax_to_partial.json", {"grid.T": T})
    problem = config.problem()
    result = gpm_iterate(initial_controls(problem, config.gpm), problem, config.gpm)
    assert result.J_final <= 1e-3
    assert result.final_trajectory.in_ball


def test_relaxation_below_the_reachable_time():
    config = load_run_config(CONFIGS / "relax_to_partial.json")
    problem = config.problem()
    assert problem.T == 70.0
    floor = _length_floor(problem.T, problem.params.gamma, problem.x_target.norm)
    assert floor == pytest.approx(1.8258e-3, rel=1e-3)

    result = gpm_iterate(initial_controls(problem, config.gpm), problem, config.gpm)
    history = np.asarray(result.J_history)
    assert floor <= result.J_final <= 10 * floor
    assert np.all(np.diff(history) <= 0)
    assert history[0] / result.J_final >= 50
    assert result.final_trajectory.in_ball


def test_relaxation_bisection_bracket():
    config = load_run_config(CONFIGS / "relax_to_partial.json")
    reach_tol = config.sweep.reach_tol
    sweep = SweepSettings(T_hi=400.0, T_lo=0.0, bisect_iters=4, reach_tol=reach_tol, warm_start=False)
    result = find_minimal_time(config.problem(), sweep, config.gpm, control_dt=config.grid.control_dt)

    lo, hi = result.bracket
    assert hi - lo <= 400.0 / 2**4 + 1e-9
    assert hi >= 70.0
    assert result.best.feasible and result.best.T == hi

    problem = config.problem().with_horizon(hi, horizon_intervals(hi, config.grid.control_dt))
    settings = config.gpm.model_copy(update={"stop_at_cost": reach_tol})
    again = gpm_iterate(initial_controls(problem, settings), problem, settings)
    assert again.J_final <= reach_tol
    assert again.J_final == result.best.J_final


def test_pure_to_mixed_sweep_is_feasible():
    config = load_run_config(CONFIGS / "pure_to_mixed.json")
    result = find_minimal_time(config.problem(), config.sweep, config.gpm, control_dt=config.grid.control_dt)
    assert result.records[0].T == 400.0 and result.records[0].feasible
    assert result.best.J_final <= 1e-3
    assert result.T_min_estimate <= config.sweep.T_hi
