"""Transformations between physical (x, theta) and linearized (z, psi) variables.

z_x = 1/theta and z_t = -theta_x map theta_t/theta^2 = theta_xx onto
psi_t = psi_zz with psi(z, t) = theta(x, t). The forward map integrates
1/theta_0 from a finite anchor (default x = 0) and is only offered where
theta_0 keeps one strict sign.
"""
import logging
from typing import List, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from stefan.exceptions import SingularTransformError, UsageError
from stefan.models.profile import LinearizedProfile, PhysicalProfile
from stefan.models.trajectory import FieldSnapshot

logger = logging.getLogger(__name__)

DEFAULT_ANCHOR = 0.0


def _check_sign(x: np.ndarray, theta: np.ndarray) -> None:
    """Raise if theta vanishes or changes sign between consecutive samples."""
    sign = np.sign(theta)
    bad = np.nonzero((sign[:-1] * sign[1:] <= 0))[0]
    if bad.size or (x.size == 1 and sign[0] == 0):
        i = int(bad[0]) if bad.size else 0
        hi = min(i + 1, x.size - 1)
        raise SingularTransformError(
            f"theta_0 vanishes or changes sign on [{x[i]:.6g}, {x[hi]:.6g}]",
            interval=(float(x[i]), float(x[hi])),
        )


def _path(profile: PhysicalProfile, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Grid nodes strictly inside (lo, hi) plus interpolated endpoints."""
    x = profile.x_grid
    if lo < x[0] - 1e-12 or hi > x[-1] + 1e-12:
        raise UsageError(f"[{lo:.6g}, {hi:.6g}] leaves the sampled range [{x[0]:.6g}, {x[-1]:.6g}]")
    inner = x[(x > lo) & (x < hi)]
    nodes = np.concatenate(([lo], inner, [hi]))
    return nodes, profile.theta_at(nodes)


def _signed_integral(profile: PhysicalProfile, anchor: float, x: float) -> float:
    """int_anchor^x dx'/theta_0 by the trapezoid rule on the sample grid."""
    if x == anchor:
        return 0.0
    lo, hi = min(anchor, x), max(anchor, x)
    nodes, theta = _path(profile, lo, hi)
    _check_sign(nodes, theta)
    value = float(np.trapezoid(1.0 / theta, nodes))
    return value if x > anchor else -value


def z_from_x(profile: PhysicalProfile, x: float, anchor: float = DEFAULT_ANCHOR) -> float:
    """z_0(x) = int_anchor^x dx'/theta_0(x')."""
    return _signed_integral(profile, anchor, x)


def h_of_s(profile: PhysicalProfile, s: float) -> float:
    """h = int_0^s dx'/theta_0(x'), the initial-datum part of the front law."""
    return _signed_integral(profile, 0.0, s)


def transform_profile(profile: PhysicalProfile, anchor: float = DEFAULT_ANCHOR) -> LinearizedProfile:
    """Map a sign-definite theta_0 sample onto (z, psi_0, psi_0').

    psi_0 equals theta_0 at the nodes; psi_0' = theta_0' theta_0 by the chain
    rule through z_x = 1/theta.

    Args:
        profile: Physical datum, nonzero and of one sign on its grid
        anchor: Abscissa mapped to z = 0

    Returns:
        LinearizedProfile on the image grid, b_bar = z_0(b)

    Raises:
        SingularTransformError: If theta_0 vanishes or changes sign
    """
    x = profile.x_grid
    theta = profile.theta_values
    _check_sign(x, theta)
    z = cumulative_trapezoid(1.0 / theta, x, initial=0.0)
    z = z - _signed_integral(profile, float(x[0]), anchor)
    dpsi = np.gradient(theta, x) * theta
    logger.debug("transformed %d samples, z in [%.6g, %.6g]", x.size, z[0], z[-1])
    return LinearizedProfile(
        z_grid=z,
        psi_values=theta,
        dpsi_values=dpsi,
        tail_value=profile.tail_value,
        b_bar=float(z[-1]),
        beta2=profile.beta2,
    )


def x_from_z(profile: LinearizedProfile, z, anchor: float = DEFAULT_ANCHOR):
    """Inverse of the anchored transform: x = anchor + int_0^z psi_0 dz'.

    z = 0 is the image of the anchor, so the table is referenced there.
    """
    table = cumulative_trapezoid(profile.psi_values, profile.z_grid, initial=0.0)
    z = np.asarray(z, dtype=float)
    if np.any(z < profile.z_grid[0] - 1e-12) or np.any(z > profile.z_grid[-1] + 1e-12):
        raise UsageError("z lies outside the linearized profile")

    def primitive(points):
        i = np.clip(np.searchsorted(profile.z_grid, points, side="right") - 1, 0, profile.z_grid.size - 2)
        z0 = profile.z_grid[i]
        psi0 = profile.psi_values[i]
        psi_end = profile.psi_at(points)
        return table[i] + 0.5 * (psi0 + psi_end) * (points - z0)

    return (anchor + primitive(z) - primitive(np.asarray(0.0)))[()]


def x_from_z_parametric(snapshot: FieldSnapshot, s_at_t: float, zbar_at_t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Parametric physical curve (x(z), theta(z)) anchored at the free boundary.

    x(z) = s(t) - int_z^{zbar} psi dz' by the trapezoid rule and theta = psi.
    x need not be monotone: dx/dz = psi changes sign where psi crosses zero.
    """
    z = snapshot.z_grid
    if abs(z[-1] - zbar_at_t) > 1e-9 * max(1.0, abs(zbar_at_t)):
        raise UsageError(f"snapshot grid ends at {z[-1]!r}, not at zbar = {zbar_at_t!r}")
    running = cumulative_trapezoid(snapshot.psi, z, initial=0.0)
    x = s_at_t - (running[-1] - running)
    return x, snapshot.psi.copy()


def compatibility_residual(snapshots: List[FieldSnapshot]) -> float:
    """max |psi_t - psi_zz| over interior points of equally spaced snapshots.

    psi_t by centred differences in time, psi_zz by the three-point formula
    on the (possibly non-uniform) common grid.
    """
    if len(snapshots) < 3:
        raise UsageError("at least three snapshots are needed")
    z = snapshots[0].z_grid
    for snap in snapshots[1:]:
        if snap.z_grid.size != z.size or not np.allclose(snap.z_grid, z, rtol=0.0, atol=1e-12):
            raise UsageError("snapshots must share one z grid")
    times = np.array([snap.t for snap in snapshots])
    steps = np.diff(times)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise UsageError("snapshots must be equally spaced in time")
    dt = steps[0]
    h_minus = np.diff(z)[:-1]
    h_plus = np.diff(z)[1:]

    worst = 0.0
    for k in range(1, len(snapshots) - 1):
        psi = snapshots[k].psi
        psi_t = (snapshots[k + 1].psi[1:-1] - snapshots[k - 1].psi[1:-1]) / (2.0 * dt)
        psi_zz = 2.0 * ((psi[2:] - psi[1:-1]) / h_plus - (psi[1:-1] - psi[:-2]) / h_minus) / (h_plus + h_minus)
        worst = max(worst, float(np.max(np.abs(psi_t - psi_zz))))
    return worst
