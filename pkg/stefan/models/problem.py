"""Problem and discretization settings."""
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stefan.exceptions import ConfigurationError, DegeneratePrefactorError
from stefan.models.profile import DPSI_TOL, PROFILE_TOL, LinearizedProfile, PhysicalProfile

# Smallest admissible |1 + 1/(2 beta2)|.
PREFACTOR_FLOOR = 1e-6


class BoundaryLaw(str, Enum):
    """How the transformed front zbar(t) follows from the flux nu(t)."""
    PAPER_H = "paper_h"
    FROZEN_H = "frozen_h"


class IntegralForm(str, Enum):
    """Which boundary integral equation drives nu(t)."""
    GREEN = "green"
    PRINTED = "printed"


class KtauMode(str, Enum):
    """Argument of the K_tau term in the printed flux equation."""
    FROZEN = "frozen"
    RETARDED = "retarded"


class ProblemSpec(BaseModel):
    """Data of the transformed one-phase Stefan problem."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    profile: LinearizedProfile
    beta1: float = Field(description="Far-field temperature, > 0")
    beta2: float = Field(description="Front temperature, < 0")
    b: float = Field(description="Physical front position at t = 0")
    boundary_law: BoundaryLaw = BoundaryLaw.FROZEN_H
    ie_form: IntegralForm = IntegralForm.GREEN
    physical_profile: Optional[PhysicalProfile] = None

    @model_validator(mode="after")
    def _check_problem(self):
        if not self.beta1 > 0:
            raise ValueError(f"beta1 must be positive, got {self.beta1}")
        if not self.beta2 < 0:
            raise ValueError(f"beta2 must be negative, got {self.beta2}")
        if abs(self.profile.beta2 - self.beta2) > 1e-12 * abs(self.beta2):
            raise ValueError("profile.beta2 does not match beta2")
        if abs(self.profile.tail_value - self.beta1) > 1e-12 * self.beta1:
            raise ValueError("profile.tail_value does not match beta1")
        self.profile.check_endpoints(PROFILE_TOL)
        self.profile.check_slopes(DPSI_TOL)
        if abs(1.0 + 1.0 / (2.0 * self.beta2)) < PREFACTOR_FLOOR:
            raise DegeneratePrefactorError(
                f"1 + 1/(2*beta2) vanishes for beta2 = {self.beta2}"
            )
        if self.physical_profile is not None:
            self.physical_profile.check_endpoints(PROFILE_TOL)
        if self.boundary_law is BoundaryLaw.PAPER_H:
            if self.physical_profile is None:
                raise ValueError("boundary_law=paper_h needs a physical_profile")
            if abs(self.physical_profile.b - self.b) > 1e-9 * max(1.0, abs(self.b)):
                raise ValueError("physical_profile must end at x = b")
        return self

    @property
    def b_bar(self) -> float:
        return self.profile.b_bar

    @property
    def prefactor(self) -> float:
        """1 + 1/(2 beta2), the coefficient of nu on the left of the printed flux equation."""
        return 1.0 + 1.0 / (2.0 * self.beta2)

    @property
    def front_speed_factor(self) -> float:
        """c in d(zbar)/dt = c * nu under the frozen_h law."""
        return -(1.0 + self.beta2) / self.beta2 ** 2


class SolverConfig(BaseModel):
    """Time discretization and Picard settings of the Volterra solver."""
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0, description="Time step")
    t_end: float = Field(gt=0, description="Horizon")
    picard_tol: float = Field(default=1e-12, ge=1e-14)
    picard_max: int = Field(default=50, ge=1)
    z_tail: float = Field(default=10.0, gt=0, description="Depth below zbar(t) of default snapshot grids")
    ktau_mode: KtauMode = KtauMode.FROZEN
    snapshot_times: Tuple[float, ...] = ()
    snapshot_points: int = Field(default=201, ge=2)

    @model_validator(mode="after")
    def _check_horizon(self):
        if not self.dt < self.t_end:
            raise ValueError(f"dt = {self.dt} must be smaller than t_end = {self.t_end}")
        if abs(round(self.t_end / self.dt) * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"t_end = {self.t_end} is not a whole number of steps dt = {self.dt}")
        for t in self.snapshot_times:
            if not 0 <= t <= self.t_end:
                raise ValueError(f"snapshot time {t} lies outside [0, t_end]")
        return self

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def time_grid(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def snapshot_indices(self):
        """Trajectory node indices nearest to the requested snapshot times."""
        return [int(round(t / self.dt)) for t in self.snapshot_times]


class FdConfig(BaseModel):
    """Front-fixing finite-difference discretization on y in [-depth, 0]."""
    model_config = ConfigDict(frozen=True)

    depth: float = Field(default=10.0, gt=0)
    ny: int = Field(default=400, ge=16)
    dt: float = Field(default=1e-4, gt=0)
    theta_scheme: float = Field(default=1.0, ge=0.0, le=1.0)

    @property
    def spacing(self) -> float:
        return self.depth / (self.ny - 1)

    @property
    def mesh_ratio(self) -> float:
        return self.dt / self.spacing ** 2

    def check_stability(self) -> None:
        """Reject explicit-leaning schemes beyond the diffusion stability limit."""
        if self.theta_scheme < 0.5 and self.mesh_ratio * (1.0 - 2.0 * self.theta_scheme) > 0.5:
            raise ConfigurationError(
                f"dt/h^2 = {self.mesh_ratio:.4g} is unstable for theta_scheme = {self.theta_scheme}"
            )
