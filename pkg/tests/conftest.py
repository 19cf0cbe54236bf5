import numpy as np
import pytest

from bloch_control.gpm import FixedTimeProblem
from bloch_control.models import ControlBounds, GpmSettings, SystemParams
from bloch_control.quantum_state import BlochVector


@pytest.fixture
def params() -> SystemParams:
    """omega = 1, gamma = 2e-3, kappa = 1e-2"""
    return SystemParams()


@pytest.fixture
def bounds() -> ControlBounds:
    return ControlBounds()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def fast_params() -> SystemParams:
    """Stronger dissipation and coupling so small problems converge in a few iterations."""
    return SystemParams(omega=1.0, gamma=0.05, kappa=0.1)


@pytest.fixture
def fast_problem(fast_params, bounds) -> FixedTimeProblem:
    return FixedTimeProblem(
        params=fast_params,
        bounds=bounds,
        x0=BlochVector(0.0, 0.0, 1.0),
        x_target=BlochVector(0.0, 0.0, 0.9),
        T=6.0,
        N=24,
        substeps=10,
    )


@pytest.fixture
def gpm_settings() -> GpmSettings:
    """Zero coherent seed: on the x3 axis the problem then only involves n."""
    return GpmSettings(max_iters=60, v_seed=0.0)
