"""Traveling-front parameters."""
import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class FrontSolution(BaseModel):
    """psi = beta1 (1 - exp(-V (z - V t))) with the front at zbar = b_bar + V t."""
    model_config = ConfigDict(frozen=True)

    beta1: float = Field(gt=0)
    beta2: float = Field(lt=0)
    b_bar: float = Field(gt=0)
    V: float = Field(description="Front speed in z")
    nu_const: float = Field(description="Constant flux psi_z at the front")
    s_dot: float = Field(description="Physical front speed")
    alpha: float = Field(description="s_dot / V")

    @model_validator(mode="after")
    def _check_invariants(self):
        if not self.V < 0:
            raise ValueError(f"front speed must be negative, got {self.V}")
        target = 1.0 + abs(self.beta2) / self.beta1
        if not math.isclose(math.exp(-self.V * self.b_bar), target, rel_tol=1e-12):
            raise ValueError("exp(-V b_bar) != 1 + |beta2|/beta1")
        if not math.isclose(self.alpha, (self.beta2 - self.beta1) / self.beta2, rel_tol=1e-12):
            raise ValueError("alpha != (beta2 - beta1)/beta2")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if not math.isclose(self.nu_const, self.V * (self.beta1 - self.beta2), rel_tol=1e-12):
            raise ValueError("nu_const != V (beta1 - beta2)")
        return self
