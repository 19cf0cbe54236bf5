"""CSV / JSON artifacts written and read by the CLI."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..errors import ConfigError
from ..gpm import IterationRecord
from ..integrator import ControlGrid, Trajectory
from ..settings import settings

TRAJECTORY_COLUMNS = ["t", "x1", "x2", "x3", "v", "n"]
CONTROL_COLUMNS = ["t", "v", "n"]
CONVERGENCE_COLUMNS = ["iter", "J", "beta", "step_accepted"]


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=settings.csv_float_format, lineterminator="\n")
    return path


def write_trajectory_csv(path: Path, traj: Trajectory, u: ControlGrid) -> Path:
    return _write_frame(traj.to_frame(u)[TRAJECTORY_COLUMNS], path)


def write_controls_csv(path: Path, u: ControlGrid) -> Path:
    return _write_frame(pd.DataFrame({"t": u.times, "v": u.v, "n": u.n}), path)


def write_convergence_csv(path: Path, records: Iterable[IterationRecord]) -> Path:
    frame = pd.DataFrame(
        [
            {
                "iter": r.iteration,
                "J": r.cost,
                "beta": np.nan if r.beta is None else r.beta,
                "step_accepted": r.accepted,
            }
            for r in records
        ],
        columns=CONVERGENCE_COLUMNS,
    )
    return _write_frame(frame, path)


def write_json(path: Path, model: BaseModel) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n")
    return path


def read_controls_csv(path: str | Path, T: float) -> ControlGrid:
    """Load a ``t,v,n`` control file for horizon T; rows must sit on the uniform grid."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise ConfigError(f"cannot read control file {path}: {err}") from None
    missing = [c for c in CONTROL_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"control file {path} lacks columns {missing}")
    if frame.empty:
        raise ConfigError(f"control file {path} has no rows")

    N = len(frame)
    expected = np.arange(N) * (T / N)
    if not np.allclose(frame["t"].to_numpy(), expected, rtol=1e-9, atol=1e-12):
        raise ConfigError(
            f"control file {path}: times do not match a uniform grid of {N} intervals on [0, {T:g}]"
        )
    values = frame[["v", "n"]].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"control file {path} contains non-finite values")
    if np.any(values[:, 1] < 0):
        raise ConfigError(f"control file {path}: incoherent control n must be non-negative")
    return ControlGrid(T, values[:, 0], values[:, 1])
