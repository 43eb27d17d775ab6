"""Heat kernel, its derivatives and singular-quadrature primitives.

K(z, t) = exp(-z^2 / 4t) / (2 sqrt(pi t)). All functions broadcast over
numpy arrays and raise DomainError for non-positive times.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import erfc

from stefan.exceptions import DomainError, UsageError
from stefan.models.arrays import FloatArray, strictly_increasing

SQRT_PI = np.sqrt(np.pi)

# exp(-745) is below the smallest subnormal double.
UNDERFLOW_EXPONENT = 745.0


class SingularWeightRow(BaseModel):
    """Weights w_i with sum_i w_i f(t_i) = int_0^target f(tau) (target - tau)^(-1/2) dtau."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t_grid: FloatArray
    target_t: float
    weights: FloatArray

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.weights.size != self.t_grid.size:
            raise ValueError("one weight per grid node is required")
        return self

    def apply(self, samples) -> float:
        return float(np.dot(self.weights, samples))


def _positive_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel needs t > 0")
    return t


def eval_K(z, t):
    """K(z, t); exactly 0 once z^2/(4t) exceeds the underflow threshold."""
    t = _positive_time(t)
    exponent = np.asarray(z, dtype=float) ** 2 / (4.0 * t)
    value = np.exp(-np.minimum(exponent, UNDERFLOW_EXPONENT)) / (2.0 * SQRT_PI * np.sqrt(t))
    return np.where(exponent > UNDERFLOW_EXPONENT, 0.0, value)[()]


def eval_K_z(z, t):
    """dK/dz = -z/(2t) K."""
    t = _positive_time(t)
    return (-np.asarray(z, dtype=float) / (2.0 * t) * eval_K(z, t))[()]


def eval_K_t(z, t):
    """dK/dt = (z^2/(4t^2) - 1/(2t)) K, which equals d2K/dz2."""
    t = _positive_time(t)
    z = np.asarray(z, dtype=float)
    return ((z ** 2 / (4.0 * t ** 2) - 1.0 / (2.0 * t)) * eval_K(z, t))[()]


def layer_mass(a, z, t):
    """int_{-inf}^{a} K(z - xi, t) dxi = erfc((z - a) / (2 sqrt t)) / 2."""
    t = _positive_time(t)
    return (0.5 * erfc((np.asarray(z, dtype=float) - np.asarray(a, dtype=float)) / (2.0 * np.sqrt(t))))[()]


def profile_convolution(nodes, values, tail_value: float, z, t):
    """int_{-inf}^{nodes[-1]} K(z - xi, t) f(xi) dxi for piecewise-linear f.

    f interpolates `values` on `nodes` and equals `tail_value` below
    nodes[0]. Each segment is integrated in closed form from the Gaussian
    mass and first moment, so the result is exact for the interpolant.

    Args:
        nodes: Increasing abscissae
        values: Samples of f at the nodes
        tail_value: Constant value of f below nodes[0]
        z: Scalar or array of evaluation points
        t: Time, > 0

    Returns:
        Scalar or array shaped like `z`

    Raises:
        DomainError: If t <= 0
    """
    t = float(_positive_time(t))
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    z = np.asarray(z, dtype=float)
    zz = z[..., None]

    mass = layer_mass(nodes, zz, t)
    gauss = eval_K(nodes - zz, t)
    seg_mass = np.diff(mass, axis=-1)
    # int_a^c (xi - a) K dxi = 2t (K(a - z) - K(c - z)) + (z - a) * seg_mass
    seg_moment = 2.0 * t * (gauss[..., :-1] - gauss[..., 1:]) + (zz - nodes[:-1]) * seg_mass
    slopes = np.diff(values) / np.diff(nodes)

    total = np.sum(values[:-1] * seg_mass + slopes * seg_moment, axis=-1)
    total = total + tail_value * mass[..., 0]
    return total[()]


def abel_row(t_grid, target_t: float) -> SingularWeightRow:
    """Product-integration weights for the (target - tau)^(-1/2) factor.

    Exact for continuous piecewise-linear integrands on `t_grid`. Nodes past
    `target_t` get zero weight.

    Args:
        t_grid: Strictly increasing nodes starting at 0
        target_t: Upper limit; must be one of the nodes

    Returns:
        SingularWeightRow whose weights w satisfy
        sum w_k g(t_k) = int_0^target (target - tau)^(-1/2) g(tau) dtau

    Raises:
        UsageError: If the grid is malformed or target_t is off the grid
    """
    grid = np.asarray(t_grid, dtype=float)
    if grid.size < 1 or grid[0] != 0.0 or not strictly_increasing(grid):
        raise UsageError("t_grid must start at 0 and increase strictly")
    n = int(np.argmin(np.abs(grid - target_t)))
    spacing = float(np.min(np.diff(grid))) if grid.size > 1 else 1.0
    if abs(grid[n] - target_t) > 1e-9 * min(spacing, max(1.0, abs(target_t))):
        raise UsageError(f"target_t = {target_t!r} is not a node of t_grid")
    target = float(grid[n])

    weights = np.zeros_like(grid)
    if n > 0:
        root_a = np.sqrt(target - grid[:n])
        root_b = np.sqrt(np.maximum(target - grid[1:n + 1], 0.0))
        diff = np.diff(grid[:n + 1]) / (root_a + root_b)  # sqrt(a) - sqrt(b)
        scale = 2.0 / 3.0 * diff / (root_a + root_b)
        left = scale * (root_a + 2.0 * root_b)
        right = scale * (2.0 * root_a + root_b)
        weights[:n] += left
        weights[1:n + 1] += right
    return SingularWeightRow(t_grid=grid, target_t=target, weights=weights)
