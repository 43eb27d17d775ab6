"""Error hierarchy for the Stefan solvers.

All errors derive from ValueError so callers that only care about bad
input can keep catching ValueError.
"""
from typing import Optional, Tuple


class StefanError(ValueError):
    """Base class for every error raised by this package."""


class DomainError(StefanError):
    """An argument lies outside the domain of the operation."""


class UsageError(StefanError):
    """The call itself is malformed (off-grid target, mismatched grids, ...)."""


class SingularTransformError(StefanError):
    """theta_0 vanishes or changes sign on the integration path of the transform."""

    def __init__(self, message: str, interval: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.interval = interval


class DegeneratePrefactorError(StefanError):
    """The prefactor 1 + 1/(2 beta2) of the printed flux equation is (nearly) zero."""


class OutOfRegimeError(StefanError):
    """Certificate constants requested outside |beta2| > 1/2."""


class NonConvergenceError(StefanError):
    """Picard iteration did not converge; carries the trajectory computed so far."""

    def __init__(self, message: str, partial=None, step: Optional[int] = None):
        super().__init__(message)
        self.partial = partial
        self.step = step


class ConfigurationError(StefanError):
    """Invalid configuration file, schema violation or unstable discretization."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
