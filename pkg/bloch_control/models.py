from __future__ import annotations

from typing import Any, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SystemParams(_Frozen):
    """Model constants of the Bloch equations"""
    omega: float = Field(1.0, gt=0, description="Transition frequency (rad/time)")
    gamma: float = Field(2e-3, gt=0, description="Dissipation strength (1/time)")
    kappa: float = Field(1e-2, description="Coupling mu/hbar (1/time per control unit)")

    @field_validator("kappa")
    @classmethod
    def _kappa_nonzero(cls, value: float) -> float:
        if value == 0:
            raise ValueError("kappa must be non-zero")
        return value


class ControlBounds(_Frozen):
    """Box Q = [v_min, v_max] x [0, n_max] of admissible control values"""
    v_min: float = -10.0
    v_max: float = 10.0
    n_max: float = Field(1.0, ge=0, description="Upper bound of the incoherent control")

    @model_validator(mode="after")
    def _ordered(self) -> "ControlBounds":
        if self.v_min > self.v_max:
            raise ValueError(f"v_min ({self.v_min}) must not exceed v_max ({self.v_max})")
        return self


class GpmSettings(_Frozen):
    """Gradient projection method knobs"""
    alpha: float = Field(1e3, gt=0, description="Gradient step scale")
    epsilon: float = Field(1e-9, gt=0, lt=1, description="Stop when |J(k+1) - J(k)| < epsilon")
    max_iters: int = Field(500, ge=1)
    beta_grid_size: int = Field(32, ge=2, description="Uniform beta grid points over (0, 1]")
    beta_refine_iters: int = Field(20, ge=0, description="Golden-section evaluations after the grid")
    v_seed: float = Field(1.0, description="Constant coherent control of the initial guess")
    n_seed: float = Field(0.0, ge=0, description="Constant incoherent control of the initial guess")
    stop_at_cost: Optional[float] = Field(None, gt=0, description="Stop once J drops to this value")
    gradient_check: bool = Field(False, description="Finite-difference pre-flight at iterate 0")


class GridSettings(_Frozen):
    """Time discretization of one horizon"""
    T: float = Field(..., gt=0, description="Final time")
    N: Optional[int] = Field(None, ge=1, description="Control intervals; default ceil(T/control_dt)")
    control_dt: Optional[float] = Field(None, gt=0, description="Overrides settings.control_dt")
    substeps: Optional[int] = Field(None, ge=1, description="RK4 steps per control interval")


class SweepSettings(_Frozen):
    """Outer search over final times"""
    T_hi: float = Field(..., gt=0, description="Horizon known (or hoped) to be feasible")
    T_lo: float = Field(0.0, ge=0)
    reach_tol: float = Field(1e-6, gt=0, description="J threshold declaring the target reached")
    bisect_iters: int = Field(8, ge=0)
    warm_start: bool = True
    grid: Optional[List[float]] = Field(None, description="Explicit horizons; enables grid mode")

    @model_validator(mode="before")
    @classmethod
    def _grid_sets_t_hi(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("T_hi") is None and data.get("grid"):
            data = {**data, "T_hi": max(data["grid"])}
        return data

    @model_validator(mode="after")
    def _bracket(self) -> "SweepSettings":
        if self.T_lo >= self.T_hi:
            raise ValueError(f"T_lo ({self.T_lo}) must be smaller than T_hi ({self.T_hi})")
        if self.grid is not None:
            if not self.grid:
                raise ValueError("grid must list at least one horizon")
            if any(T <= 0 for T in self.grid):
                raise ValueError("grid horizons must be positive")
        return self


class ControlSource(_Frozen):
    """Controls replayed by the simulate command"""
    v: float = 0.0
    n: float = Field(0.0, ge=0)
    file: Optional[str] = Field(None, description="Control CSV (t,v,n) emitted by optimize")


class DensityReport(BaseModel):
    """Per-invariant residuals of a candidate density matrix"""
    hermiticity_residual: float
    trace_residual: float
    determinant: float
    hermitian: bool
    unit_trace: bool
    positive: bool

    @property
    def valid(self) -> bool:
        return self.hermitian and self.unit_trace and self.positive

    def failures(self) -> List[str]:
        names = []
        if not self.hermitian:
            names.append(f"hermiticity (residual {self.hermiticity_residual:.2e})")
        if not self.unit_trace:
            names.append(f"trace (residual {self.trace_residual:.2e})")
        if not self.positive:
            names.append(f"positivity (det {self.determinant:.2e})")
        return names


# Output schemas --------------------------------------------------------------

class SimulationSummary(BaseModel):
    """summary.json of the simulate command"""
    J_final: float
    norm_max: float
    T: float
    N: int
    substeps: int
    params: SystemParams


class OptimizationSummary(BaseModel):
    """summary.json of the optimize command"""
    J_final: float
    iterations: int
    termination: str
    T: float
    N: int
    substeps: int
    gradient_check_max_rel_error: Optional[float] = None


class SweepReportRecord(BaseModel):
    T: float
    J_final: float
    iterations: int
    termination: str
    feasible: bool
    control_file: Optional[str] = None


class SweepReport(BaseModel):
    """sweep.json of the sweep command"""
    mode: str
    t_min_estimate: float
    upper_bound_only: bool = Field(
        True, description="Infeasibility is relative to the optimizer budget, not a proof"
    )
    bracket: Tuple[Optional[float], float]
    reach_tol: float
    records: List[SweepReportRecord] = []
