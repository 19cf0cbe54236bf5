"""Run configuration: JSON file + dotted overrides, validated by pydantic."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Dict, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator, ValidationError

from .errors import ConfigError
from .gpm import FixedTimeProblem
from .minimal_time import horizon_intervals
from .models import ControlBounds, ControlSource, GpmSettings, GridSettings, SweepSettings, SystemParams
from .quantum_state import BlochVector, bloch_from_density


def parse_state(value: Any) -> BlochVector:
    """Bloch vector ``[x1, x2, x3]`` or density matrix as four ``[re, im]`` pairs (row-major)."""
    if isinstance(value, BlochVector):
        return value
    if isinstance(value, Mapping):
        value = [value.get("x1"), value.get("x2"), value.get("x3")]
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValueError("state must be [x1, x2, x3] or four [re, im] pairs") from None
    if arr.shape == (3,):
        return BlochVector.from_array(arr)
    if arr.shape == (4, 2):
        return bloch_from_density((arr[:, 0] + 1j * arr[:, 1]).reshape(2, 2))
    raise ValueError(f"state must be [x1, x2, x3] or four [re, im] pairs, got shape {arr.shape}")


State = Annotated[
    BlochVector,
    PlainValidator(parse_state),
    PlainSerializer(lambda b: b.to_list(), return_type=list),
]


class RunConfig(BaseModel):
    """Everything one CLI invocation needs"""
    model_config = ConfigDict(extra="forbid")

    system: SystemParams = SystemParams()
    bounds: ControlBounds = ControlBounds()
    initial_state: State
    target_state: State
    grid: GridSettings
    gpm: GpmSettings = GpmSettings()
    sweep: Optional[SweepSettings] = None
    controls: ControlSource = ControlSource()
    seed: int = 0
    output_dir: Optional[str] = None

    @property
    def N(self) -> int:
        return horizon_intervals(self.grid.T, self.grid.control_dt, self.grid.N)

    def problem(self) -> FixedTimeProblem:
        return FixedTimeProblem(
            params=self.system,
            bounds=self.bounds,
            x0=self.initial_state,
            x_target=self.target_state,
            T=self.grid.T,
            N=self.N,
            substeps=self.grid.substeps,
        )


def apply_overrides(data: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Set ``a.b.c = value`` entries into nested dicts, creating levels as needed."""
    for dotted, value in overrides.items():
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"cannot set {dotted}: {key} is not an object")
            node = child
        node[leaf] = value
    return data


def format_validation_error(err: ValidationError, source: str) -> str:
    lines = [f"invalid configuration in {source}:"]
    for item in err.errors():
        loc = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {loc}: {item['msg']}")
    return "\n".join(lines)


def build_config(data: Dict[str, Any], source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(format_validation_error(err, source)) from None


def load_run_config(path: str | Path, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    source = str(path)
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {source}: {err.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{source}: line {err.lineno} column {err.colno}: {err.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return build_config(apply_overrides(data, overrides or {}), source)
