"""Density matrices of a two-level system and their Bloch-ball representation.

The density-level master-equation right-hand side lives here as well; it is
coded directly from the commutator and dissipator so that it can serve as an
independent check of the Bloch equations in :mod:`bloch_control.dynamics`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constants import BALL_TOL, DENSITY_TOL
from .errors import InvalidDensity, NegativeIncoherentControl, OutsideBlochBall
from .models import DensityReport, SystemParams

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_1, SIGMA_2, SIGMA_3])

# Raising / lowering operators of the dissipator.
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

# H0/hbar = omega * EXCITED, V/hbar = kappa * SIGMA_1
EXCITED = np.array([[0, 0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class BlochVector:
    """Point of the closed unit ball; ``norm`` may exceed 1 by ``BALL_TOL`` only."""

    x1: float
    x2: float
    x3: float

    def __post_init__(self) -> None:
        values = (self.x1, self.x2, self.x3)
        if not all(np.isfinite(values)):
            raise OutsideBlochBall(f"Bloch vector has non-finite components: {values}")
        if sum(c * c for c in values) > 1 + BALL_TOL:
            raise OutsideBlochBall(
                f"Bloch vector {values} has norm {np.sqrt(sum(c * c for c in values)):.12g} > 1"
            )

    @classmethod
    def from_array(cls, values: ArrayLike) -> "BlochVector":
        arr = np.asarray(values, dtype=float).reshape(-1)
        if arr.shape != (3,):
            raise OutsideBlochBall(f"Bloch vector needs three components, got {arr.size}")
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x1, self.x2, self.x3])

    def __array__(self, dtype: Any = None, copy: Any = None) -> NDArray[Any]:
        return self.as_array() if dtype is None else self.as_array().astype(dtype)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    @property
    def purity(self) -> float:
        """Tr rho^2 = (1 + |x|^2) / 2"""
        return 0.5 * (1.0 + self.norm**2)

    @property
    def is_pure(self) -> bool:
        return abs(self.norm - 1.0) <= BALL_TOL

    def to_list(self) -> list[float]:
        return [self.x1, self.x2, self.x3]


@dataclass(frozen=True)
class DensityMatrix:
    elements: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.elements, dtype=complex)
        if arr.shape != (2, 2):
            raise InvalidDensity(f"density matrix must be 2x2, got shape {arr.shape}")
        report = validate_density(arr)
        if not report.valid:
            raise InvalidDensity("density matrix violates " + ", ".join(report.failures()))
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)

    def __array__(self, dtype: Any = None, copy: Any = None) -> NDArray[Any]:
        return self.elements if dtype is None else self.elements.astype(dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix({self.elements.tolist()!r})"


def validate_density(matrix: ArrayLike) -> DensityReport:
    """Check hermiticity, unit trace and positivity; never raises for a 2x2 input."""
    rho = np.asarray(matrix, dtype=complex)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace = float(abs(np.trace(rho) - 1.0))
    # for a Hermitian unit-trace 2x2 matrix, rho >= 0 iff det rho >= 0
    det = float(np.real(np.linalg.det(rho)))
    return DensityReport(
        hermiticity_residual=herm,
        trace_residual=trace,
        determinant=det,
        hermitian=herm <= DENSITY_TOL,
        unit_trace=trace <= DENSITY_TOL,
        positive=det >= -DENSITY_TOL,
    )


def _as_density(rho: DensityMatrix | ArrayLike) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(np.asarray(rho))


def bloch_from_matrix_rhs(matrix: ArrayLike) -> NDArray[np.float64]:
    """Real vector (Tr M sigma_1, Tr M sigma_2, Tr M sigma_3) of a Hermitian matrix."""
    m = np.asarray(matrix, dtype=complex)
    return np.real(np.einsum("ij,kji->k", m, PAULI))


def bloch_from_density(rho: DensityMatrix | ArrayLike) -> BlochVector:
    return BlochVector.from_array(bloch_from_matrix_rhs(_as_density(rho).elements))


def density_from_bloch(x: BlochVector | ArrayLike) -> DensityMatrix:
    b = x if isinstance(x, BlochVector) else BlochVector.from_array(x)
    x1, x2, x3 = b.x1, b.x2, b.x3
    return DensityMatrix(
        0.5 * np.array([[1 + x3, x1 - 1j * x2], [x1 + 1j * x2, 1 - x3]], dtype=complex)
    )


def _commutator(a: NDArray[Any], b: NDArray[Any]) -> NDArray[Any]:
    return a @ b - b @ a


def _anticommutator(a: NDArray[Any], b: NDArray[Any]) -> NDArray[Any]:
    return a @ b + b @ a


def dissipator(rho: DensityMatrix | ArrayLike, n: float) -> NDArray[np.complex128]:
    """D(rho, n): thermal-like part scaled by n plus spontaneous decay to |0>."""
    r = _as_density(rho).elements
    sp, sm = SIGMA_PLUS, SIGMA_MINUS
    decay = sp @ r @ sm - 0.5 * _anticommutator(sm @ sp, r)
    thermal = sp @ r @ sm + sm @ r @ sp - 0.5 * _anticommutator(sm @ sp + sp @ sm, r)
    return n * thermal + decay


def master_rhs_density(
    rho: DensityMatrix | ArrayLike, v: float, n: float, params: SystemParams
) -> NDArray[np.complex128]:
    """d rho / dt = -i [H0/hbar + (V/hbar) v, rho] + gamma D(rho, n)"""
    if n < 0:
        raise NegativeIncoherentControl(f"incoherent control n={n} is negative")
    r = _as_density(rho).elements
    hamiltonian = params.omega * EXCITED + params.kappa * v * SIGMA_1
    return -1j * _commutator(hamiltonian, r) + params.gamma * dissipator(r, n)
