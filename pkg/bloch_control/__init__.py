__all__ = [
    "settings",
    "BlochVector",
    "DensityMatrix",
    "ControlGrid",
    "FixedTimeProblem",
    "gpm_iterate",
    "find_minimal_time",
]
__version__ = "0.1.0"

from .settings import settings  # noqa: E402
from .quantum_state import BlochVector, DensityMatrix  # noqa: E402
from .integrator import ControlGrid  # noqa: E402
from .gpm import FixedTimeProblem, gpm_iterate  # noqa: E402
from .minimal_time import find_minimal_time  # noqa: E402
