import numpy as np
import pytest
from pydantic import ValidationError

from bloch_control.errors import InfeasibleAtTHi
from bloch_control.gpm import FixedTimeProblem, evaluate_cost, gpm_iterate, initial_controls
from bloch_control.minimal_time import find_minimal_time, horizon_intervals
from bloch_control.models import SweepSettings
from bloch_control.quantum_state import BlochVector

# Shortest horizon that brings x3 from 1 down to 0.9 with n = 1 throughout
# (x3 relaxes towards 1/3 at rate 3 gamma for the fast parameter set). The zero
# coherent seed keeps x1 = x2 = 0, so v never enters.
T_MIN_N_ONLY = np.log((1 - 1 / 3) / (0.9 - 1 / 3)) / 0.15


def _pinned(template, gpm_settings, sweep, **kwargs):
    return find_minimal_time(template, sweep, gpm_settings, N=template.N, substeps=template.substeps, **kwargs)


def test_horizon_intervals():
    assert horizon_intervals(70.0, control_dt=0.25) == 280
    assert horizon_intervals(70.0, control_dt=0.5) == 140
    assert horizon_intervals(70.0, control_dt=0.5, N=10) == 10
    assert horizon_intervals(0.1, control_dt=0.25) == 1
    assert horizon_intervals(1.0, control_dt=0.3) == 4


def test_sweep_settings_validation():
    with pytest.raises(ValidationError, match="T_lo"):
        SweepSettings(T_hi=1.0, T_lo=2.0)
    with pytest.raises(ValidationError):
        SweepSettings(grid=[])
    with pytest.raises(ValidationError, match="positive"):
        SweepSettings(grid=[3.0, -1.0])
    assert SweepSettings(grid=[70.0, 400.0, 200.0]).T_hi == 400.0


def test_bisection_bracket(fast_problem, gpm_settings):
    sweep = SweepSettings(T_hi=6.0, T_lo=0.0, bisect_iters=4)
    result = _pinned(fast_problem, gpm_settings, sweep)

    lo, hi = result.bracket
    assert result.mode == "bisection"
    assert hi - lo <= (sweep.T_hi - sweep.T_lo) / 2**sweep.bisect_iters + 1e-12
    assert result.T_min_estimate == hi
    assert T_MIN_N_ONLY - 0.02 <= hi
    assert len(result.records) == 1 + sweep.bisect_iters

    best = result.best
    assert best.feasible and best.T == hi
    stored = fast_problem.with_horizon(hi, fast_problem.N, fast_problem.substeps)
    assert evaluate_cost(stored, best.u_final) <= sweep.reach_tol

    cold = gpm_iterate(initial_controls(stored, gpm_settings), stored, gpm_settings)
    assert cold.J_final <= sweep.reach_tol

    for record in result.records:
        if record.T <= lo:
            assert not record.feasible


def test_bisection_without_warm_start(fast_problem, gpm_settings):
    sweep = SweepSettings(T_hi=6.0, bisect_iters=3, warm_start=False)
    result = _pinned(fast_problem, gpm_settings, sweep)
    assert result.bracket == (0.75, 1.5)


def test_infeasible_upper_horizon(fast_problem, gpm_settings):
    sweep = SweepSettings(T_hi=0.5, bisect_iters=2)
    with pytest.raises(InfeasibleAtTHi) as excinfo:
        _pinned(fast_problem, gpm_settings, sweep)
    err = excinfo.value
    assert err.exit_code == 3
    assert err.T == 0.5 and err.cost > sweep.reach_tol
    assert "T_hi" in str(err)


def test_target_at_start_reaches_resolution_floor(fast_problem, gpm_settings):
    template = FixedTimeProblem(
        params=fast_problem.params,
        bounds=fast_problem.bounds,
        x0=BlochVector(0.0, 0.0, 1.0),
        x_target=BlochVector(0.0, 0.0, 1.0),
        T=1.0,
        N=4,
        substeps=5,
    )
    sweep = SweepSettings(T_hi=1.0, T_lo=0.0, bisect_iters=5)
    result = _pinned(template, gpm_settings, sweep)
    assert result.T_min_estimate == pytest.approx(1.0 / 32)
    assert result.bracket == (0.0, 1.0 / 32)
    assert all(r.feasible for r in result.records)


def test_grid_mode(fast_problem, gpm_settings):
    sweep = SweepSettings(grid=[1.5, 6.0, 0.75, 3.0])
    result = _pinned(fast_problem, gpm_settings, sweep)
    assert result.mode == "grid"
    assert [r.T for r in result.records] == [6.0, 3.0, 1.5, 0.75]
    assert [r.feasible for r in result.records] == [True, True, True, False]
    assert result.T_min_estimate == 1.5
    assert result.bracket == (0.75, 1.5)


def test_grid_mode_in_a_process_pool(fast_problem, gpm_settings):
    sweep = SweepSettings(grid=[6.0, 1.5, 0.75], warm_start=False)
    sequential = _pinned(fast_problem, gpm_settings, sweep, workers=1)
    pooled = _pinned(fast_problem, gpm_settings, sweep, workers=2)
    assert [r.feasible for r in pooled.records] == [r.feasible for r in sequential.records]
    assert [r.J_final for r in pooled.records] == pytest.approx([r.J_final for r in sequential.records])
    assert pooled.bracket == sequential.bracket


def test_grid_mode_without_feasible_horizon(fast_problem, gpm_settings):
    sweep = SweepSettings(grid=[0.5, 0.25])
    with pytest.raises(InfeasibleAtTHi):
        _pinned(fast_problem, gpm_settings, sweep)
