"""Contraction-mapping constants and the certified existence window."""
import math
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

FLAG_B2_BINDING = "B2 is a user-supplied constant and sets the binding window"
FLAG_EXP_OVERFLOW = "exp(B1^2) overflowed; B6 and B8 reported as inf"
FLAG_VACUOUS = "window vacuous"


def _close(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-300)


class CertificateConstants(BaseModel):
    """A1, M, B1, B3 and the profile norms they were computed from."""
    model_config = ConfigDict(frozen=True)

    A1: float
    M: float
    B1: float
    B3: float
    psi_norm: float = Field(description="max(beta1, |beta2|, sup |psi_0|)")
    dpsi_norm: float = Field(description="sup |psi_0'|")

    @model_validator(mode="after")
    def _check_identities(self):
        if not _close(self.M, 2.0 * self.A1 + 1.0):
            raise ValueError("M != 2 A1 + 1")
        if not _close(self.B1, self.M * self.B3):
            raise ValueError("B1 != M B3")
        return self


class BoundSet(BaseModel):
    """B4..B8 of the contraction estimate."""
    model_config = ConfigDict(frozen=True)

    B4: float
    B5: float
    B6: float
    B7: float
    B8: float
    flags: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_sum(self):
        if not _close(self.B8, self.B4 + self.B5 + self.B6 + self.B7):
            raise ValueError("B8 != B4 + B5 + B6 + B7")
        return self


class Certificate(BaseModel):
    """Every constant of the contraction argument plus the window sigma."""
    model_config = ConfigDict(frozen=True)

    A1: float
    M: float
    B1: float
    B2: float
    B3: float
    B4: float
    B5: float
    B6: float
    B7: float
    B8: float
    sigma1: float
    sigma2: float
    sigma3: float
    sigma: float
    norms: Dict[str, float]
    flags: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_identities(self):
        if not _close(self.M, 2.0 * self.A1 + 1.0):
            raise ValueError("M != 2 A1 + 1")
        if not _close(self.B1, self.M * self.B3):
            raise ValueError("B1 != M B3")
        if not _close(self.B8, self.B4 + self.B5 + self.B6 + self.B7):
            raise ValueError("B8 != B4 + B5 + B6 + B7")
        if self.sigma != min(self.sigma1, self.sigma2, self.sigma3):
            raise ValueError("sigma != min(sigma1, sigma2, sigma3)")
        return self

    @property
    def vacuous(self) -> bool:
        return FLAG_VACUOUS in self.flags

    def rows(self):
        """(name, value, flag) rows for the certificate table."""
        binding = {self.sigma1: "sigma1", self.sigma2: "sigma2", self.sigma3: "sigma3"}[self.sigma]
        rows = []
        for name in ("A1", "M", "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8",
                     "sigma1", "sigma2", "sigma3", "sigma"):
            flag = ""
            if name == "B2":
                flag = "user-supplied"
            elif name == binding:
                flag = "binding"
            elif name in ("B6", "B8") and math.isinf(getattr(self, name)):
                flag = "overflow"
            elif name == "sigma" and self.vacuous:
                flag = "vacuous"
            rows.append((name, getattr(self, name), flag))
        for key in sorted(self.norms):
            rows.append((key, self.norms[key], "norm"))
        return rows


class ContractionStats(BaseModel):
    """Measured ||T nu - T nu_hat|| / ||nu - nu_hat|| over random pairs in S_M."""
    model_config = ConfigDict(frozen=True)

    max_ratio: float
    mean_ratio: float
    trials: int = Field(description="Pairs that entered the statistics")
    horizon: float
    steps: int

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.max_ratio < 1.0
