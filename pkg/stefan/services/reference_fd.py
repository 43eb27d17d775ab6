"""Front-fixing finite differences for the transformed Stefan problem.

With y = z - zbar(t) the moving domain becomes y in [-L, 0] and
psi_t = psi_yy + zbar'(t) psi_y, psi(-L) = beta1, psi(0) = beta2.
The flux nu = psi_y(0) closes the system through the boundary law. Nothing
here shares code with the integral-equation path except the boundary law
itself.
"""
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded

from stefan.exceptions import NonConvergenceError, UsageError
from stefan.models.problem import FdConfig, ProblemSpec
from stefan.models.trajectory import FieldSnapshot, FreeBoundaryTrajectory
from stefan.services.stefan_ie import FrontLaw

logger = logging.getLogger(__name__)

COUPLING_TOL = 1e-12
COUPLING_MAX = 50


def _stencil(speed: float, h: float, n: int) -> Dict[int, np.ndarray]:
    """Row coefficients of psi_yy + speed psi_y by offset; Dirichlet rows are zero.

    The advective term leans towards the upwind side (+y for speed >= 0)
    with the second-order one-sided difference, falling back to first order
    in the row next to the boundary it would cross.
    """
    coef = {offset: np.zeros(n) for offset in range(-2, 3)}
    rows = np.arange(1, n - 1)
    coef[-1][rows] += 1.0 / h ** 2
    coef[0][rows] -= 2.0 / h ** 2
    coef[1][rows] += 1.0 / h ** 2
    if speed >= 0.0:
        far, near = rows[rows + 2 <= n - 1], rows[rows + 2 > n - 1]
        coef[0][far] -= 1.5 * speed / h
        coef[1][far] += 2.0 * speed / h
        coef[2][far] -= 0.5 * speed / h
        coef[0][near] -= speed / h
        coef[1][near] += speed / h
    else:
        far, near = rows[rows >= 2], rows[rows < 2]
        coef[0][far] += 1.5 * speed / h
        coef[-1][far] -= 2.0 * speed / h
        coef[-2][far] += 0.5 * speed / h
        coef[0][near] += speed / h
        coef[-1][near] -= speed / h
    return coef


def _operator(psi: np.ndarray, speed: float, h: float) -> np.ndarray:
    """psi_yy + speed psi_y on every node, zero on the Dirichlet ends."""
    coef = _stencil(speed, h, psi.size)
    out = coef[0] * psi
    for offset in (1, 2):
        out[:-offset] += coef[offset][:-offset] * psi[offset:]
        out[offset:] += coef[-offset][offset:] * psi[:-offset]
    return out


def _step(psi: np.ndarray, speed: float, fd: FdConfig, beta1: float, beta2: float) -> np.ndarray:
    """One theta-scheme step with Dirichlet ends."""
    h, dt, theta = fd.spacing, fd.dt, fd.theta_scheme
    coef = _stencil(speed, h, psi.size)

    rhs = psi + (1.0 - theta) * dt * _operator(psi, speed, h)
    rhs[0], rhs[-1] = beta1, beta2

    # banded storage: bands[2 - k, i + k] holds row i, column i + k
    bands = np.zeros((5, psi.size))
    bands[2] = 1.0 - theta * dt * coef[0]
    for offset in (1, 2):
        bands[2 - offset, offset:] = -theta * dt * coef[offset][:-offset]
        bands[2 + offset, :-offset] = -theta * dt * coef[-offset][offset:]
    return solve_banded((2, 2), bands, rhs)


def _boundary_flux(psi: np.ndarray, h: float) -> float:
    return float((3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * h))


def fd_solve(spec: ProblemSpec, fd: FdConfig, t_end: float, snapshot_times: Sequence[float] = (),
             freeze_front: bool = False) -> Tuple[FreeBoundaryTrajectory, List[FieldSnapshot]]:
    """March the front-fixed problem to t_end.

    freeze_front keeps zbar = b_bar (no coupling), reducing the scheme to
    the heat equation on a fixed interval.

    Args:
        spec: Problem data and boundary law
        fd: Mesh, time step and theta of the scheme
        t_end: Horizon, rounded to a whole number of steps
        snapshot_times: Times at which the field is kept
        freeze_front: Decouple the front

    Returns:
        (trajectory, snapshots); nu is the one-sided psi_y at y = 0

    Raises:
        ConfigurationError: If the scheme is unstable for the mesh ratio
        UsageError: If t_end is shorter than one step
        NonConvergenceError: If the speed iteration of a step stalls
    """
    fd.check_stability()
    steps = int(round(t_end / fd.dt))
    if steps < 1:
        raise UsageError(f"t_end = {t_end} is shorter than one step of {fd.dt}")
    if abs(steps * fd.dt - t_end) > 1e-9 * t_end:
        logger.warning("t_end = %g is not a whole number of steps dt = %g; stopping at t = %g",
                       t_end, fd.dt, steps * fd.dt)
    times = np.arange(steps + 1) * fd.dt
    h = fd.spacing
    y = np.linspace(-fd.depth, 0.0, fd.ny)
    law = FrontLaw(spec)
    beta1, beta2 = spec.beta1, spec.beta2
    wanted: Dict[int, float] = {int(round(t / fd.dt)): t for t in snapshot_times}

    psi = spec.profile.psi_at(spec.b_bar + y)
    psi[0], psi[-1] = beta1, beta2

    nu = np.zeros(steps + 1)
    zbar = np.full(steps + 1, spec.b_bar)
    s = np.full(steps + 1, spec.b)
    iters = np.zeros(steps + 1, dtype=np.int64)
    nu[0] = _boundary_flux(psi, h)
    snapshots = []
    if 0 in wanted:
        snapshots.append(FieldSnapshot(t=0.0, z_grid=zbar[0] + y, psi=psi, boundary_residual=0.0))

    logger.info("FD run: ny=%d depth=%g dt=%g theta=%g, %d steps", fd.ny, fd.depth, fd.dt, fd.theta_scheme, steps)
    integral = 0.0
    speed = 0.0 if freeze_front else law.slope(nu[0], zbar[0], zbar[0], fd.dt)
    for n in range(1, steps + 1):
        if freeze_front:
            psi_new = _step(psi, 0.0, fd, beta1, beta2)
            nu[n] = _boundary_flux(psi_new, h)
            iters[n] = 1
        else:
            for k in range(1, COUPLING_MAX + 1):
                psi_new = _step(psi, speed, fd, beta1, beta2)
                nu[n] = _boundary_flux(psi_new, h)
                zbar[n], s[n] = law.position(integral + 0.5 * fd.dt * (nu[n - 1] + nu[n]))
                update = (zbar[n] - zbar[n - 1]) / fd.dt
                change = abs(update - speed)
                speed = update
                if change <= COUPLING_TOL:
                    break
            else:
                logger.warning("front coupling stalled at step %d (t=%g)", n, times[n])
                partial = FreeBoundaryTrajectory(times=times[:n], nu=nu[:n], zbar=zbar[:n], s=s[:n],
                                                 picard_iters=iters[:n])
                raise NonConvergenceError(
                    f"front coupling did not converge at t = {times[n]:.6g}", partial=partial, step=n
                )
            iters[n] = k
            integral += 0.5 * fd.dt * (nu[n - 1] + nu[n])
        psi = psi_new
        if n in wanted:
            snapshots.append(FieldSnapshot(t=float(times[n]), z_grid=zbar[n] + y, psi=psi,
                                           boundary_residual=abs(float(psi[-1]) - beta2)))

    traj = FreeBoundaryTrajectory(times=times, nu=nu, zbar=zbar, s=s, picard_iters=iters)
    logger.info("FD finished at t=%g: nu=%.8g zbar=%.8g", times[-1], nu[-1], zbar[-1])
    return traj, snapshots


def compare_trajectories(a: FreeBoundaryTrajectory, b: FreeBoundaryTrajectory) -> pd.DataFrame:
    """sup, mean and L2 differences of nu, zbar and s on common nodes.

    The nodes of the coarser trajectory inside the overlap serve as the
    common nodes; the finer one is interpolated linearly onto them.

    Returns:
        DataFrame indexed by column (nu, zbar, s) with sup, mean and l2

    Raises:
        UsageError: If the time ranges do not overlap on any node
    """
    start = max(a.times[0], b.times[0])
    stop = min(a.times[-1], b.times[-1])
    if stop < start:
        raise UsageError("trajectories cover disjoint time ranges")
    coarse = a if len(a) <= len(b) else b
    nodes = coarse.times[(coarse.times >= start) & (coarse.times <= stop)]
    if nodes.size == 0:
        raise UsageError("trajectories share no time nodes")

    rows = []
    for column in ("nu", "zbar", "s"):
        gap = np.abs(np.interp(nodes, a.times, getattr(a, column)) - np.interp(nodes, b.times, getattr(b, column)))
        l2 = float(np.sqrt(trapezoid(gap ** 2, nodes))) if nodes.size > 1 else float(gap[0])
        rows.append({"column": column, "sup": float(np.max(gap)), "mean": float(np.mean(gap)), "l2": l2})
    return pd.DataFrame(rows).set_index("column")
