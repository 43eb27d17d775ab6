"""Initial-datum models in physical (x, theta) and linearized (z, psi) variables."""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stefan.exceptions import DomainError
from stefan.models.arrays import FloatArray, strictly_increasing

# Endpoint tolerance for sampled profiles.
PROFILE_TOL = 1e-4
# Admissible gap between psi_0' samples and differences of psi_0, relative to max(1, sup|psi_0'|).
DPSI_TOL = 1e-2


class PhysicalProfile(BaseModel):
    """Samples of theta_0(x) on [x_min, b]."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x_grid: FloatArray = Field(description="Strictly increasing abscissae, last node is b")
    theta_values: FloatArray = Field(description="theta_0 at the grid nodes")
    tail_value: float = Field(description="beta1, the asymptote of theta_0 as x -> -inf")
    beta2: float = Field(description="Boundary temperature theta_0(b)")

    @model_validator(mode="after")
    def _check_grid(self):
        if self.x_grid.size < 2:
            raise ValueError("a profile needs at least two samples")
        if self.theta_values.size != self.x_grid.size:
            raise ValueError("x_grid and theta_values differ in length")
        if not strictly_increasing(self.x_grid):
            raise ValueError("x_grid must be strictly increasing")
        return self

    @property
    def b(self) -> float:
        return float(self.x_grid[-1])

    def theta_at(self, x):
        """Piecewise-linear theta_0."""
        return np.interp(x, self.x_grid, self.theta_values)

    def check_endpoints(self, tol: float = PROFILE_TOL) -> None:
        """Enforce beta1 > 0 > beta2 and the sampled endpoint conditions.

        The ordering beta1 > |theta_0| > |beta2| cannot hold for a continuous
        theta_0 that changes sign, so only the endpoints are checked.
        """
        if not self.tail_value > 0:
            raise DomainError(f"beta1 must be positive, got {self.tail_value}")
        if not self.beta2 < 0:
            raise DomainError(f"beta2 must be negative, got {self.beta2}")
        if abs(self.theta_values[-1] - self.beta2) > tol:
            raise DomainError(
                f"theta_0(b) = {self.theta_values[-1]:.6g} differs from beta2 = {self.beta2:.6g}"
            )
        if abs(self.theta_values[0] - self.tail_value) > tol:
            raise DomainError(
                f"theta_0 at x_min = {self.theta_values[0]:.6g} differs from beta1 = {self.tail_value:.6g}"
            )


class LinearizedProfile(BaseModel):
    """Samples of psi_0(z) and psi_0'(z) on [z_min, b_bar]; the solver's native input."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    z_grid: FloatArray = Field(description="Strictly increasing nodes, last node is b_bar")
    psi_values: FloatArray = Field(description="psi_0 at the nodes")
    dpsi_values: FloatArray = Field(description="psi_0' at the nodes")
    tail_value: float = Field(description="beta1; psi_0 is constant below z_min")
    b_bar: float = Field(description="Initial front position in z")
    beta2: float = Field(description="Boundary value psi_0(b_bar)")

    @model_validator(mode="after")
    def _check_grid(self):
        n = self.z_grid.size
        if n < 2:
            raise ValueError("a profile needs at least two samples")
        if self.psi_values.size != n or self.dpsi_values.size != n:
            raise ValueError("z_grid, psi_values and dpsi_values differ in length")
        if not strictly_increasing(self.z_grid):
            raise ValueError("z_grid must be strictly increasing")
        if abs(self.z_grid[-1] - self.b_bar) > 1e-9 * max(1.0, abs(self.b_bar)):
            raise ValueError(f"last node {self.z_grid[-1]!r} is not b_bar = {self.b_bar!r}")
        return self

    @property
    def z_min(self) -> float:
        return float(self.z_grid[0])

    @property
    def psi_norm(self) -> float:
        """sup |psi_0| including the asymptote and the boundary value."""
        return float(max(self.tail_value, abs(self.beta2), np.max(np.abs(self.psi_values))))

    @property
    def dpsi_norm(self) -> float:
        return float(np.max(np.abs(self.dpsi_values)))

    def psi_at(self, z):
        """Piecewise-linear psi_0 with the constant tail below z_min."""
        return np.interp(z, self.z_grid, self.psi_values, left=self.tail_value)

    def dpsi_at(self, z):
        return np.interp(z, self.z_grid, self.dpsi_values, left=0.0)

    def dpsi_consistency(self) -> float:
        """Largest gap between dpsi_values and centred differences of psi_values."""
        edge_order = 2 if self.z_grid.size > 2 else 1
        centred = np.gradient(self.psi_values, self.z_grid, edge_order=edge_order)
        return float(np.max(np.abs(self.dpsi_values - centred)))

    def check_endpoints(self, tol: float = PROFILE_TOL) -> None:
        if not self.tail_value > 0:
            raise DomainError(f"beta1 must be positive, got {self.tail_value}")
        if not self.beta2 < 0:
            raise DomainError(f"beta2 must be negative, got {self.beta2}")
        if abs(self.psi_values[-1] - self.beta2) > tol:
            raise DomainError(
                f"psi_0(b_bar) = {self.psi_values[-1]:.6g} differs from beta2 = {self.beta2:.6g}"
            )
        if abs(self.psi_values[0] - self.tail_value) > tol:
            raise DomainError(
                f"psi_0(z_min) = {self.psi_values[0]:.6g} differs from beta1 = {self.tail_value:.6g}"
            )
        if abs(self.dpsi_values[0]) > tol:
            raise DomainError(f"psi_0'(z_min) = {self.dpsi_values[0]:.6g} is not flat")

    def check_slopes(self, tol: float = DPSI_TOL) -> None:
        """Reject dpsi_values that do not follow the differences of psi_values."""
        gap = self.dpsi_consistency()
        if gap > tol * max(1.0, self.dpsi_norm):
            raise DomainError(
                f"psi_0' samples differ from differences of psi_0 by {gap:.3g}"
            )
