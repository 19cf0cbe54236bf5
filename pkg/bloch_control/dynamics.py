"""Controlled Bloch equations, the conjugate system and the Pontryagin function.

All functions take plain array-likes (``BlochVector`` and ``AdjointVector``
convert through ``__array__``) and never clamp controls: bound enforcement is
the job of :func:`bloch_control.gpm.project_controls`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NonFiniteState
from .models import SystemParams

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class AdjointVector:
    p1: float
    p2: float
    p3: float

    def __post_init__(self) -> None:
        if not all(np.isfinite((self.p1, self.p2, self.p3))):
            raise NonFiniteState(f"costate has non-finite components: {(self.p1, self.p2, self.p3)}")

    @classmethod
    def from_array(cls, values: ArrayLike) -> "AdjointVector":
        arr = np.asarray(values, dtype=float).reshape(3)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> FloatArray:
        return np.array([self.p1, self.p2, self.p3])

    def __array__(self, dtype: Any = None, copy: Any = None) -> NDArray[Any]:
        return self.as_array() if dtype is None else self.as_array().astype(dtype)


def _xyz(values: ArrayLike) -> FloatArray:
    return np.asarray(values, dtype=float)


def bloch_rhs(x: ArrayLike, v: float, n: float, params: SystemParams) -> FloatArray:
    x1, x2, x3 = _xyz(x)
    w, g, k = params.omega, params.gamma, params.kappa
    return np.array(
        [
            -g / 2 * x1 + w * x2 - g * x1 * n,
            -w * x1 - g / 2 * x2 - 2 * k * x3 * v - g * x2 * n,
            2 * k * x2 * v - g * x3 + g - 2 * g * x3 * n,
        ]
    )


def adjoint_rhs(p: ArrayLike, v: float, n: float, params: SystemParams) -> FloatArray:
    """Conjugate system; independent of x."""
    p1, p2, p3 = _xyz(p)
    w, g, k = params.omega, params.gamma, params.kappa
    return np.array(
        [
            g / 2 * p1 + g * p1 * n + w * p2,
            -w * p1 + g / 2 * p2 + g * p2 * n - 2 * k * p3 * v,
            2 * k * p2 * v + g * p3 + 2 * g * p3 * n,
        ]
    )


def switching_functions(p: ArrayLike, x: ArrayLike, params: SystemParams) -> Tuple[Any, Any]:
    """(K_v, K_n) = (dH/dv, dH/dn); broadcasts over leading axes of p and x."""
    pa, xa = _xyz(p), _xyz(x)
    p1, p2, p3 = pa[..., 0], pa[..., 1], pa[..., 2]
    x1, x2, x3 = xa[..., 0], xa[..., 1], xa[..., 2]
    k_v = 2 * params.kappa * (p3 * x2 - p2 * x3)
    k_n = -params.gamma * (p1 * x1 + p2 * x2 + 2 * p3 * x3)
    return k_v, k_n


def terminal_adjoint(x_T: ArrayLike, x_target: ArrayLike) -> AdjointVector:
    return AdjointVector.from_array(-2.0 * (_xyz(x_T) - _xyz(x_target)))


def pontryagin_h(p: ArrayLike, x: ArrayLike, v: float, n: float, params: SystemParams) -> float:
    p1, p2, p3 = _xyz(p)
    x1, x2, x3 = _xyz(x)
    w, g = params.omega, params.gamma
    k_v, k_n = switching_functions(p, x, params)
    h_free = p1 * (-g / 2 * x1 + w * x2) + p2 * (-w * x1 - g / 2 * x2) + p3 * (g - g * x3)
    return float(k_v * v + k_n * n + h_free)


def drift_matrix(v: ArrayLike, n: ArrayLike, params: SystemParams) -> FloatArray:
    """Linear part A(v, n) of the Bloch equations, shape ``broadcast(v, n).shape + (3, 3)``.

    ``bloch_rhs(x) = A x + drift_offset(params)`` and ``adjoint_rhs(p) = -A.T p``.
    """
    va, na = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(n, dtype=float))
    w, g, k = params.omega, params.gamma, params.kappa
    a = np.zeros(va.shape + (3, 3))
    a[..., 0, 0] = -g / 2 - g * na
    a[..., 0, 1] = w
    a[..., 1, 0] = -w
    a[..., 1, 1] = -g / 2 - g * na
    a[..., 1, 2] = -2 * k * va
    a[..., 2, 1] = 2 * k * va
    a[..., 2, 2] = -g - 2 * g * na
    return a


def drift_offset(params: SystemParams) -> FloatArray:
    return np.array([0.0, 0.0, params.gamma])
