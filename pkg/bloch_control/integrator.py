"""Fixed-step RK4 integration of the Bloch and conjugate systems.

Controls are piecewise constant, so on each control interval the Bloch system
is affine with constant coefficients, ``x' = A x + b``. One classical RK4 step
of size ``h`` applied to such a system is exactly the increment

    x -> x + S (A x + b),   S = h Q(hA),   Q(Z) = I + Z/2 + Z^2/6 + Z^3/24,

whose linear part is ``P(hA) = I + S A``, the degree-4 Taylor polynomial of
``exp(hA)``. Since ``A x + b`` is multiplied by ``P`` on every step, ``m`` steps
collapse to ``x -> x + K (A x + b)`` with ``K = (I + P + ... + P^(m-1)) S``.
States where ``A x + b`` vanishes are therefore kept exactly. The backward
step of the conjugate system ``p' = -A^T p`` is ``p -> (I + K A)^T p``, the
transpose of the forward linear part. Everything is vectorized over intervals
(and over stacks of candidate controls).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .constants import TRAJECTORY_BALL_TOL
from .dynamics import drift_matrix, drift_offset
from .errors import NonFiniteState
from .models import SystemParams
from .settings import settings

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


def _frozen(values: ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ControlGrid:
    """Piecewise-constant controls: ``v[i], n[i]`` act on ``[i dt, (i+1) dt)``."""

    T: float
    v: FloatArray = field(repr=False)
    n: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        v, n = _frozen(self.v), _frozen(self.n)
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"final time must be positive, got T={self.T}")
        if v.ndim != 1 or v.shape != n.shape or v.size < 1:
            raise ValueError(f"v and n must be 1-D of equal length >= 1, got {v.shape} and {n.shape}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "n", n)

    @classmethod
    def constant(cls, T: float, N: int, v: float = 0.0, n: float = 0.0) -> "ControlGrid":
        return cls(T, np.full(N, float(v)), np.full(N, float(n)))

    @property
    def N(self) -> int:
        return int(self.v.size)

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> FloatArray:
        """Interval start times"""
        return np.arange(self.N) * self.dt

    def with_values(self, v: ArrayLike, n: ArrayLike) -> "ControlGrid":
        return ControlGrid(self.T, v, n)

    def resample(self, T: float, N: int) -> "ControlGrid":
        """Nearest-interval lookup on relative time t/T (warm starts across horizons)."""
        centers = (np.arange(N) + 0.5) / N
        idx = np.clip(np.floor(centers * self.N).astype(int), 0, self.N - 1)
        return ControlGrid(T, self.v[idx], self.n[idx])

    def __repr__(self) -> str:
        return f"ControlGrid(T={self.T:g}, N={self.N})"


@dataclass(frozen=True)
class Trajectory:
    times: FloatArray = field(repr=False)
    states: FloatArray = field(repr=False)
    substeps: int = 1
    nodes: Optional[FloatArray] = field(default=None, repr=False)

    @property
    def final_state(self) -> FloatArray:
        return self.states[-1]

    @property
    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.states, axis=1)))

    @property
    def in_ball(self) -> bool:
        return self.max_norm <= 1 + TRAJECTORY_BALL_TOL

    def to_frame(self, u: ControlGrid) -> pd.DataFrame:
        """Rows ``t,x1,x2,x3,v,n`` per endpoint; the final row repeats the last control."""
        v = np.append(u.v, u.v[-1])
        n = np.append(u.n, u.n[-1])
        return pd.DataFrame(
            {
                "t": self.times,
                "x1": self.states[:, 0],
                "x2": self.states[:, 1],
                "x3": self.states[:, 2],
                "v": v,
                "n": n,
            }
        )


@dataclass(frozen=True)
class AdjointTrajectory:
    times: FloatArray = field(repr=False)
    costates: FloatArray = field(repr=False)
    substeps: int = 1
    nodes: Optional[FloatArray] = field(default=None, repr=False)


def default_substeps(dt: float, max_step: Optional[float] = None) -> int:
    step = settings.max_step if max_step is None else max_step
    return max(1, math.ceil(dt / step - 1e-9))


def _resolve_substeps(substeps: Optional[int], dt: float) -> int:
    if substeps is None:
        return default_substeps(dt)
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    return int(substeps)


def _apply(m: FloatArray, x: FloatArray) -> FloatArray:
    return np.einsum("...ij,...j->...i", m, x)


def _rk4_parts(
    v: ArrayLike, n: ArrayLike, params: SystemParams, h: float
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """``(A, S, P)`` of one RK4 step: ``x+ = x + S (A x + b)``, ``P = I + S A``."""
    a = drift_matrix(v, n, params)
    z = h * a
    eye = np.broadcast_to(np.eye(3), z.shape)
    z2 = z @ z
    s = h * (eye + z / 2 + z2 / 6 + (z2 @ z) / 24)
    return a, s, eye + s @ a


def rk4_affine_step(
    v: ArrayLike, n: ArrayLike, params: SystemParams, h: float
) -> Tuple[FloatArray, FloatArray]:
    """One RK4 step of ``x' = A x + b`` as ``(P, q)`` with ``x+ = P x + q``."""
    _, s, p = _rk4_parts(v, n, params, h)
    return p, s @ drift_offset(params)


def _power_sum(p: FloatArray, m: int) -> FloatArray:
    """``I + p + ... + p^(m-1)`` by binary splitting over the last two axes."""
    eye = np.broadcast_to(np.eye(p.shape[-1]), p.shape)
    total, power = np.zeros_like(p), eye.copy()
    block_sum, block_pow = eye.copy(), p
    while m:
        if m & 1:
            total = total + power @ block_sum
            power = power @ block_pow
        block_sum = block_sum + block_pow @ block_sum
        block_pow = block_pow @ block_pow
        m >>= 1
    return total


@dataclass(frozen=True)
class _IntervalMaps:
    a: FloatArray  # drift matrices A_i
    s: FloatArray  # one-step increment matrices
    p: FloatArray  # one-step linear parts I + S A
    k: FloatArray  # whole-interval increment matrices


def _interval_maps(v: ArrayLike, n: ArrayLike, params: SystemParams, dt: float, substeps: int) -> _IntervalMaps:
    a, s, p = _rk4_parts(v, n, params, dt / substeps)
    return _IntervalMaps(a, s, p, _power_sum(p, substeps) @ s)


def _check_finite(values: NDArray[Any], what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteState(f"{what} integration produced non-finite values")


def integrate_forward(
    x0: ArrayLike,
    u: ControlGrid,
    params: SystemParams,
    substeps: Optional[int] = None,
    keep_nodes: bool = False,
) -> Trajectory:
    m = _resolve_substeps(substeps, u.dt)
    maps = _interval_maps(u.v, u.n, params, u.dt, m)
    b = drift_offset(params)
    states = np.empty((u.N + 1, 3))
    states[0] = np.asarray(x0, dtype=float)
    for i in range(u.N):
        states[i + 1] = states[i] + _apply(maps.k[i], _apply(maps.a[i], states[i]) + b)
    _check_finite(states, "forward")

    nodes = None
    if keep_nodes:
        nodes = np.empty((u.N, m + 1, 3))
        nodes[:, 0] = states[:-1]
        for j in range(m):
            nodes[:, j + 1] = nodes[:, j] + _apply(maps.s, _apply(maps.a, nodes[:, j]) + b)
        _check_finite(nodes, "forward")
    return Trajectory(np.linspace(0.0, u.T, u.N + 1), states, m, nodes)


def integrate_adjoint(
    p_T: ArrayLike,
    u: ControlGrid,
    params: SystemParams,
    substeps: Optional[int] = None,
    keep_nodes: bool = False,
) -> AdjointTrajectory:
    """Backward RK4 from t = T to 0 on the forward grid."""
    m = _resolve_substeps(substeps, u.dt)
    maps = _interval_maps(u.v, u.n, params, u.dt, m)
    linear = np.eye(3) + maps.k @ maps.a
    costates = np.empty((u.N + 1, 3))
    costates[-1] = np.asarray(p_T, dtype=float)
    for i in range(u.N - 1, -1, -1):
        costates[i] = linear[i].T @ costates[i + 1]
    _check_finite(costates, "adjoint")

    nodes = None
    if keep_nodes:
        nodes = np.empty((u.N, m + 1, 3))
        nodes[:, m] = costates[1:]
        for j in range(m, 0, -1):
            nodes[:, j - 1] = np.einsum("nji,nj->ni", maps.p, nodes[:, j])
        _check_finite(nodes, "adjoint")
    return AdjointTrajectory(np.linspace(0.0, u.T, u.N + 1), costates, m, nodes)


def final_states(
    x0: ArrayLike,
    v: ArrayLike,
    n: ArrayLike,
    T: float,
    params: SystemParams,
    substeps: Optional[int] = None,
) -> FloatArray:
    """Final Bloch vectors for a stack of controls ``v, n`` of shape (B, N)."""
    va = np.atleast_2d(np.asarray(v, dtype=float))
    na = np.atleast_2d(np.asarray(n, dtype=float))
    dt = T / va.shape[-1]
    m = _resolve_substeps(substeps, dt)
    maps = _interval_maps(va, na, params, dt, m)
    b = drift_offset(params)
    x = np.broadcast_to(np.asarray(x0, dtype=float), va.shape[:-1] + (3,))
    for i in range(va.shape[-1]):
        x = x + _apply(maps.k[..., i, :, :], _apply(maps.a[..., i, :, :], x) + b)
    _check_finite(x, "forward")
    return x


def cost(traj: Trajectory, x_target: ArrayLike) -> float:
    diff = traj.final_state - np.asarray(x_target, dtype=float)
    return float(diff @ diff)
