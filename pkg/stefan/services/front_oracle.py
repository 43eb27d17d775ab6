"""Closed-form traveling front, the exact reference for every solver test.

psi(z, t) = beta1 (1 - exp(-V (z - V t))) solves psi_t = psi_zz, keeps
psi = beta2 on zbar(t) = b_bar + V t and carries the constant flux
nu = V (beta1 - beta2) along the front.
"""
import logging
import math

import numpy as np

from stefan.exceptions import DomainError
from stefan.models.front import FrontSolution
from stefan.models.trajectory import FieldSnapshot, FreeBoundaryTrajectory

logger = logging.getLogger(__name__)


def make_front(beta1: float, beta2: float, b_bar: float) -> FrontSolution:
    """
    Build the traveling front through psi(b_bar, 0) = beta2.

    Args:
        beta1: Far-field value, > 0
        beta2: Front value, < 0
        b_bar: Initial front position in z, > 0

    Returns:
        FrontSolution with V = -log(1 + |beta2|/beta1)/b_bar and the derived
        flux, physical speed and alpha

    Raises:
        DomainError: If a parameter has the wrong sign
    """
    if not beta1 > 0:
        raise DomainError(f"beta1 must be positive, got {beta1}")
    if not beta2 < 0:
        raise DomainError(f"beta2 must be negative, got {beta2}")
    if not b_bar > 0:
        raise DomainError(f"b_bar must be positive, got {b_bar}")
    V = -math.log1p(abs(beta2) / beta1) / b_bar
    return FrontSolution(
        beta1=beta1,
        beta2=beta2,
        b_bar=b_bar,
        V=V,
        nu_const=V * (beta1 - beta2),
        s_dot=(beta2 - beta1) * V / beta2,
        alpha=(beta2 - beta1) / beta2,
    )


def zbar_front(front: FrontSolution, t):
    """Front position b_bar + V t."""
    return front.b_bar + front.V * np.asarray(t, dtype=float)[()]


def s_front(front: FrontSolution, b: float, t):
    """Physical front position b + s_dot t."""
    return b + front.s_dot * np.asarray(t, dtype=float)[()]


def psi_front(front: FrontSolution, z, t: float):
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    z = np.asarray(z, dtype=float)
    zbar = zbar_front(front, t)
    if np.any(z > zbar + 1e-12 * max(1.0, abs(zbar))):
        raise DomainError(f"z lies beyond the front zbar({t}) = {zbar:.6g}")
    return (front.beta1 * -np.expm1(-front.V * (z - front.V * t)))[()]


def dpsi_front(front: FrontSolution, z, t: float):
    """psi_z of the front, beta1 V exp(-V (z - V t))."""
    z = np.asarray(z, dtype=float)
    return (front.beta1 * front.V * np.exp(-front.V * (z - front.V * t)))[()]


def x_front(front: FrontSolution, z, t: float):
    """x(z, t) = int_0^z psi dz', the parametric physical abscissa."""
    z = np.asarray(z, dtype=float)
    V = front.V
    return (front.beta1 * (z + (np.exp(-V * (z - V * t)) - np.exp(V * V * t)) / V))[()]


def consistency_residual(front: FrontSolution) -> float:
    """r = beta1 + beta1 beta2 - beta2.

    r = 0 is the parameter locus on which the front also satisfies the
    physical kinematics s_dot = psi zbar_dot + psi_z at the front.
    """
    r = front.beta1 + front.beta1 * front.beta2 - front.beta2
    if r != 0.0:
        logger.info("front is off the kinematic consistency locus: r = %.6g", r)
    return r


def front_trajectory(front: FrontSolution, b: float, times) -> FreeBoundaryTrajectory:
    """
    Exact nu, zbar and s on the given time nodes.

    Args:
        front: Front from make_front
        b: Physical front position at t = 0
        times: Increasing nodes starting at 0

    Returns:
        FreeBoundaryTrajectory with zero Picard counts
    """
    times = np.asarray(times, dtype=float)
    return FreeBoundaryTrajectory(
        times=times,
        nu=np.full(times.size, front.nu_const),
        zbar=zbar_front(front, times),
        s=s_front(front, b, times),
        picard_iters=np.zeros(times.size, dtype=np.int64),
    )


def front_snapshot(front: FrontSolution, t: float, depth: float = 10.0, points: int = 201) -> FieldSnapshot:
    """Exact field on [zbar(t) - depth, zbar(t)] with the parametric pair attached."""
    zbar = float(zbar_front(front, t))
    z = np.linspace(zbar - depth, zbar, points)
    psi = psi_front(front, z, t)
    return FieldSnapshot(
        t=t,
        z_grid=z,
        psi=psi,
        x=x_front(front, z, t),
        theta=psi,
        boundary_residual=abs(float(psi[-1]) - front.beta2),
    )
