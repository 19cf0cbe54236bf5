import json
from pathlib import Path

import pytest

from bloch_control.config import apply_overrides, build_config, load_run_config, parse_state
from bloch_control.errors import ConfigError
from bloch_control.quantum_state import BlochVector

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "initial_state": [0.0, 0.0, -1.0],
    "target_state": [0.0, 0.0, 0.5],
    "grid": {"T": 70.0},
}


def _write(tmp_path, data) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_defaults_are_the_published_parameters():
    config = build_config(dict(BASE))
    assert (config.system.omega, config.system.gamma, config.system.kappa) == (1.0, 2e-3, 1e-2)
    assert (config.bounds.v_min, config.bounds.v_max, config.bounds.n_max) == (-10.0, 10.0, 1.0)
    assert config.gpm.alpha == 1e3 and config.gpm.epsilon == 1e-9
    assert config.N == 280
    assert config.sweep is None


def test_problem_from_config():
    config = build_config({**BASE, "grid": {"T": 70.0, "N": 200}})
    problem = config.problem()
    assert problem.N == 200 and problem.T == 70.0
    assert problem.substeps == 70
    assert problem.x0 == BlochVector(0.0, 0.0, -1.0)


def test_density_matrix_states():
    data = {
        **BASE,
        "initial_state": [[0.5, 0.0], [0.0, 0.5], [0.0, -0.5], [0.5, 0.0]],
        "target_state": [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
    }
    config = build_config(data)
    assert config.initial_state.as_array() == pytest.approx([0.0, -1.0, 0.0])
    assert config.target_state.as_array() == pytest.approx([0.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "value, match",
    [
        ([0.0, 0.9, 0.9], "norm"),
        ([[1.5, 0.0], [0.0, 0.0], [0.0, 0.0], [-0.5, 0.0]], "positivity"),
        ([1.0, 2.0], "shape"),
    ],
)
def test_invalid_states(value, match):
    with pytest.raises(ValueError, match=match):
        parse_state(value)
    with pytest.raises(ConfigError, match="initial_state"):
        build_config({**BASE, "initial_state": value})


def test_mapping_state():
    assert parse_state({"x1": 0.0, "x2": 0.6, "x3": 0.0}) == BlochVector(0.0, 0.6, 0.0)


def test_errors_name_the_field():
    with pytest.raises(ConfigError) as excinfo:
        build_config({**BASE, "bounds": {"v_min": 5.0, "v_max": -5.0}}, source="run.json")
    message = str(excinfo.value)
    assert "run.json" in message
    assert "bounds" in message and "v_min" in message


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="colour"):
        build_config({**BASE, "colour": "blue"})
    with pytest.raises(ConfigError, match="gpm.alpa"):
        build_config({**BASE, "gpm": {"alpa": 3.0}})


def test_apply_overrides_creates_levels():
    data = apply_overrides({"grid": {"T": 1.0}}, {"grid.N": 4, "sweep.T_hi": 9.0, "seed": 3})
    assert data == {"grid": {"T": 1.0, "N": 4}, "sweep": {"T_hi": 9.0}, "seed": 3}
    with pytest.raises(ConfigError, match="seed"):
        apply_overrides({"seed": 3}, {"seed.value": 1})


def test_load_run_config_with_overrides(tmp_path):
    path = _write(tmp_path, BASE)
    config = load_run_config(path, {"grid.T": 35.0, "gpm.alpha": 500.0, "sweep.grid": [70.0, 35.0]})
    assert config.grid.T == 35.0
    assert config.gpm.alpha == 500.0
    assert config.sweep is not None and config.sweep.T_hi == 70.0


def test_load_run_config_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "grid": {"T": 70.0,}\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_run_config(path)


def test_load_run_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_run_config(tmp_path / "absent.json")


def test_top_level_must_be_an_object(tmp_path):
    path = _write(tmp_path, [1, 2, 3])
    with pytest.raises(ConfigError, match="object"):
        load_run_config(path)


def test_shipped_configs_load():
    relax = load_run_config(CONFIGS / "relax_to_partial.json")
    assert relax.sweep is not None and relax.sweep.grid == [400.0, 200.0, 70.0]
    mixed = load_run_config(CONFIGS / "pure_to_mixed.json")
    assert mixed.initial_state.as_array() == pytest.approx([0.0, -1.0, 0.0])
    assert mixed.target_state.norm == pytest.approx(0.0)
