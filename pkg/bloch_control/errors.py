class BlochControlError(Exception):
    """Base class for all package errors; ``exit_code`` is what the CLI returns."""

    exit_code = 1


class ConfigError(BlochControlError):
    """Run configuration or control file cannot be used"""

    exit_code = 2


class InvalidDensity(BlochControlError, ValueError):
    """Matrix violates hermiticity, unit trace or positivity"""

    exit_code = 2


class OutsideBlochBall(BlochControlError, ValueError):
    """Bloch vector norm exceeds one"""

    exit_code = 2


class NegativeIncoherentControl(BlochControlError, ValueError):
    """Incoherent control must be non-negative"""

    exit_code = 2


class ControlOutOfBounds(BlochControlError, ValueError):
    """Control values outside the admissible box"""

    exit_code = 2


class InfeasibleAtTHi(BlochControlError):
    """The starting horizon of a minimal-time search does not reach the target.

    Either the horizon is too short, the bounds are too tight, or the optimizer
    budget is too small to find the steering control.
    """

    exit_code = 3

    def __init__(self, T: float, cost: float, reach_tol: float):
        self.T = T
        self.cost = cost
        self.reach_tol = reach_tol
        super().__init__(
            f"target not reached at T={T:g}: J={cost:.3e} > reach_tol={reach_tol:.1e}; "
            "increase T_hi, relax the bounds or raise gpm.max_iters"
        )


class NonFiniteState(BlochControlError, ArithmeticError):
    """Integration produced NaN or Inf"""

    exit_code = 4


class GradientMismatch(BlochControlError, ArithmeticError):
    """Adjoint gradient disagrees with finite differences"""

    exit_code = 4
