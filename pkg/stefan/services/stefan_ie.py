"""Volterra boundary-integral solver for the flux nu(t) and the front zbar(t).

Two flux equations are available (ProblemSpec.ie_form):

green    nu(t) = 2 [ int K(zbar(t) - xi, t) psi_0'(xi) dxi
                     + int_0^t K_z(zbar(t) - zbar(tau), t - tau) nu(tau) dtau ]
printed  (1 + 1/(2 beta2)) nu(t) = - psi_0(b_bar) K(zbar(t) - b_bar, t)
                     + int K(zbar(t) - xi, t) psi_0'(xi) dxi
                     - (1/beta2) int_0^t K_z(...) nu(tau) dtau - beta2 K(zbar(t), t)

The last printed term is the K_tau history; ktau_mode=retarded replaces it
with - beta2 int_0^t K_t(zbar(tau), t - tau) dtau.

History integrals are written as int_0^t (t - tau)^(-1/2) g(tau) dtau with
a smooth g and integrated with product-integration weights. Each time step
solves the coupled (nu_n, zbar_n) pair by Picard iteration.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from stefan.exceptions import (
    DegeneratePrefactorError,
    DomainError,
    NonConvergenceError,
    UsageError,
)
from stefan.models.problem import (
    PREFACTOR_FLOOR,
    BoundaryLaw,
    IntegralForm,
    KtauMode,
    ProblemSpec,
    SolverConfig,
)
from stefan.models.trajectory import FieldSnapshot, FreeBoundaryTrajectory
from stefan.services.front_oracle import front_trajectory, make_front
from stefan.services.hodograph import h_of_s, x_from_z_parametric
from stefan.services.kernel import (
    SQRT_PI,
    abel_row,
    eval_K,
    eval_K_t,
    profile_convolution,
)

logger = logging.getLogger(__name__)

GAUSS_POINTS = 8
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_POINTS)
# Extra breakpoints, as multiples of the distance to the front.
_GRADED = (0.125, 0.25, 0.5, 1.0, 2.0)


class FrontLaw:
    """Discrete boundary law: front positions from the running flux integral.

    s(t) = b - (1/beta2) int_0^t nu in both laws.
    frozen_h: zbar(t) = b_bar + c int_0^t nu with c = -(1 + beta2)/beta2^2.
    paper_h:  zbar(t) = b_bar + h(s(t)) - h(b) - (1/beta2) int_0^t nu.
    """

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.frozen = spec.boundary_law is BoundaryLaw.FROZEN_H
        self._h_b = 0.0 if self.frozen else h_of_s(spec.physical_profile, spec.b)

    def position(self, flux_integral: float) -> Tuple[float, float]:
        """(zbar, s) for a given value of int_0^t nu."""
        spec = self.spec
        s = spec.b - flux_integral / spec.beta2
        if self.frozen:
            zbar = spec.b_bar + spec.front_speed_factor * flux_integral
        else:
            zbar = spec.b_bar + h_of_s(spec.physical_profile, s) - self._h_b - flux_integral / spec.beta2
        return zbar, s

    def positions(self, flux_integrals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        spec = self.spec
        s = spec.b - flux_integrals / spec.beta2
        if self.frozen:
            zbar = spec.b_bar + spec.front_speed_factor * flux_integrals
        else:
            h = np.array([h_of_s(spec.physical_profile, value) for value in s])
            zbar = spec.b_bar + h - self._h_b - flux_integrals / spec.beta2
        return zbar, s

    def slope(self, nu: float, zbar: float, zbar_prev: float, dt: float) -> float:
        """d(zbar)/dt at the newest node."""
        if self.frozen:
            return self.spec.front_speed_factor * nu
        return (zbar - zbar_prev) / dt


def initial_flux(spec: ProblemSpec) -> float:
    """nu(0): psi_0'(b_bar) for green, psi_0'(b_bar) / (2 (1 + 1/(2 beta2))) for printed."""
    slope = float(spec.profile.dpsi_values[-1])
    if spec.ie_form is IntegralForm.GREEN:
        return slope
    return 0.5 * slope / _prefactor(spec)


def _prefactor(spec: ProblemSpec) -> float:
    prefactor = spec.prefactor
    if abs(prefactor) < PREFACTOR_FLOOR:
        raise DegeneratePrefactorError(f"1 + 1/(2*beta2) vanishes for beta2 = {spec.beta2}")
    return prefactor


def _flux(times: np.ndarray, nu: np.ndarray, zbar: np.ndarray, slope: float,
          spec: ProblemSpec, ktau_mode: KtauMode) -> float:
    """Right-hand side at times[-1]; the last entries of nu and zbar are the trial values."""
    t = float(times[-1])
    front = float(zbar[-1])
    weights = abel_row(times, t).weights

    lag = t - times[:-1]
    delta = front - zbar[:-1]
    ratio = delta / lag
    g = np.empty_like(times)
    g[:-1] = -ratio * np.exp(-0.25 * delta * ratio) * nu[:-1]
    g[-1] = -slope * nu[-1]
    history = float(weights @ g) / (4.0 * SQRT_PI)

    profile = spec.profile
    datum = float(profile_convolution(profile.z_grid, profile.dpsi_values, 0.0, front, t))

    if spec.ie_form is IntegralForm.GREEN:
        return 2.0 * (datum + history)

    prefactor = _prefactor(spec)
    first = -float(profile.psi_values[-1]) * float(eval_K(front - spec.b_bar, t))
    if ktau_mode is KtauMode.FROZEN:
        # zbar frozen at zbar(t): the K_tau history collapses to K(zbar(t), t)
        ktau = -spec.beta2 * float(eval_K(front, t))
    else:
        gk = np.zeros_like(times)
        gk[:-1] = np.sqrt(lag) * eval_K_t(zbar[:-1], lag)
        ktau = -spec.beta2 * float(weights @ gk)
    return (first + datum - history / spec.beta2 + ktau) / prefactor


def rhs_nu(history: FreeBoundaryTrajectory, trial_nu: float, trial_zbar: float, t: float,
           spec: ProblemSpec, cfg: SolverConfig) -> float:
    """Evaluate the flux equation at time t given the trajectory on earlier nodes.

    `trial_nu` and `trial_zbar` are the values at t; together with
    `history` they form the piecewise-linear curves the history integrals
    are taken over.

    Args:
        history: Trajectory on the nodes before t
        trial_nu: Trial flux at t
        trial_zbar: Trial front position at t
        t: Evaluation time, past the last history node
        spec: Problem data
        cfg: Supplies ktau_mode

    Returns:
        The right-hand side of the flux equation

    Raises:
        DomainError: If t <= 0
        UsageError: If t does not lie past the history
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not t > history.times[-1]:
        raise UsageError(f"t = {t!r} does not lie past the history ending at {history.times[-1]!r}")
    times = np.append(history.times, t)
    nu = np.append(history.nu, trial_nu)
    zbar = np.append(history.zbar, trial_zbar)
    slope = FrontLaw(spec).slope(trial_nu, trial_zbar, float(history.zbar[-1]), t - float(history.times[-1]))
    return _flux(times, nu, zbar, slope, spec, cfg.ktau_mode)


def _trajectory(times, nu, zbar, s, iters) -> FreeBoundaryTrajectory:
    return FreeBoundaryTrajectory(times=times, nu=nu, zbar=zbar, s=s, picard_iters=iters)


def solve(spec: ProblemSpec, cfg: SolverConfig) -> FreeBoundaryTrajectory:
    """
    March the coupled (nu, zbar) system over cfg.time_grid().

    Args:
        spec: Problem data, boundary law and flux equation
        cfg: Time step, horizon and Picard settings

    Returns:
        FreeBoundaryTrajectory on every grid node, with s and zbar recomputed
        from the trapezoidal flux integral

    Raises:
        NonConvergenceError: If a step does not settle within cfg.picard_max
            iterations; the trajectory up to the previous node is attached
        DegeneratePrefactorError: If the printed form meets 1 + 1/(2 beta2) = 0
        SingularTransformError: If the paper_h law crosses theta_0 = 0
    """
    times = cfg.time_grid()
    count = times.size
    law = FrontLaw(spec)

    nu = np.zeros(count)
    zbar = np.zeros(count)
    s = np.zeros(count)
    iters = np.zeros(count, dtype=np.int64)
    nu[0] = initial_flux(spec)
    zbar[0], s[0] = spec.b_bar, spec.b

    logger.info(
        "solving %d steps of dt=%g (law=%s, form=%s, ktau=%s)",
        count - 1, cfg.dt, spec.boundary_law.value, spec.ie_form.value, cfg.ktau_mode.value,
    )
    integral = 0.0
    for n in range(1, count):
        step = times[n] - times[n - 1]
        trial = nu[n - 1]
        converged = False
        for k in range(1, cfg.picard_max + 1):
            zbar[n], s[n] = law.position(integral + 0.5 * step * (nu[n - 1] + trial))
            nu[n] = trial
            slope = law.slope(trial, zbar[n], zbar[n - 1], step)
            update = _flux(times[:n + 1], nu[:n + 1], zbar[:n + 1], slope, spec, cfg.ktau_mode)
            change = abs(update - trial)
            trial = update
            if not math.isfinite(update):
                break
            if change <= cfg.picard_tol:
                converged = True
                break
        if not converged:
            logger.warning("Picard iteration stalled at step %d (t=%g)", n, times[n])
            partial = _trajectory(times[:n], nu[:n], zbar[:n], s[:n], iters[:n])
            raise NonConvergenceError(
                f"Picard iteration did not converge within {cfg.picard_max} iterations at t = {times[n]:.6g}",
                partial=partial,
                step=n,
            )
        nu[n] = trial
        iters[n] = k
        integral += 0.5 * step * (nu[n - 1] + nu[n])
        zbar[n], s[n] = law.position(integral)
        logger.debug("step %d t=%.6g nu=%.12g zbar=%.12g iters=%d", n, times[n], nu[n], zbar[n], k)

    flux_integral = cumulative_trapezoid(nu, times, initial=0.0)
    zbar, s = law.positions(flux_integral)
    logger.info("finished at t=%g: nu=%.8g zbar=%.8g s=%.8g", times[-1], nu[-1], zbar[-1], s[-1])
    return _trajectory(times, nu, zbar, s, iters)


def flux_operator(spec: ProblemSpec, times: np.ndarray, nu: np.ndarray,
                  ktau_mode: KtauMode = KtauMode.FROZEN) -> np.ndarray:
    """One sweep of the discrete solution operator T on a trial flux curve.

    The boundary law turns `nu` into zbar, then every node n >= 1 is
    re-evaluated from the trial curve on [0, t_n]. Node 0 is the initial
    flux.
    """
    times = np.asarray(times, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if times.size != nu.size:
        raise UsageError("times and nu differ in length")
    law = FrontLaw(spec)
    zbar, _ = law.positions(cumulative_trapezoid(nu, times, initial=0.0))
    image = np.empty_like(nu)
    image[0] = initial_flux(spec)
    for n in range(1, times.size):
        slope = law.slope(nu[n], zbar[n], zbar[n - 1], times[n] - times[n - 1])
        image[n] = _flux(times[:n + 1], nu[:n + 1], zbar[:n + 1], slope, spec, ktau_mode)
    return image


def _layer(z: float, t: float, traj: FreeBoundaryTrajectory, density: np.ndarray, front: float,
           double: bool = False) -> float:
    """int_0^t K(z - zbar(tau), t - tau) mu(tau) dtau with u = sqrt(t - tau).

    With double=True the kernel is K_xi(z - zbar(tau), t - tau), where
    K_xi(z - xi, s) = (z - xi) / (2 s) K(z - xi, s).
    """
    root = math.sqrt(t)
    nodes = traj.times[traj.times <= t]
    breaks = np.sqrt(np.maximum(t - nodes, 0.0))
    distance = front - z
    graded = np.array([distance * factor for factor in _GRADED]) if distance > 0 else np.empty(0)
    breaks = np.unique(np.concatenate((breaks, graded[(graded > 0) & (graded < root)], [0.0, root])))
    left, right = breaks[:-1], breaks[1:]
    half = 0.5 * (right - left)
    u = (0.5 * (left + right))[:, None] + half[:, None] * _GAUSS_NODES[None, :]
    w = half[:, None] * _GAUSS_WEIGHTS[None, :]
    tau = t - u * u
    offset = z - np.interp(tau, traj.times, traj.zbar)
    mu = np.interp(tau, traj.times, density)
    kernel = np.exp(-offset * offset / (4.0 * u * u))
    if double:
        kernel = kernel * offset / (2.0 * u * u)
    return float(np.sum(w * kernel * mu) / SQRT_PI)


def _field(z: np.ndarray, t: float, traj: FreeBoundaryTrajectory, spec: ProblemSpec) -> np.ndarray:
    """psi(z, t) from the representation matching spec.ie_form.

    green:   int K (psi_0 - beta2) + beta2 + int K nu
    printed: int K psi_0 - (1/beta2) int K nu - beta2 int K_xi
    """
    profile = spec.profile
    beta2 = spec.beta2
    front = float(traj.zbar[traj.node_index(t)])
    nu = np.asarray(traj.nu)
    single = np.array([_layer(float(point), t, traj, nu, front) for point in z])

    if spec.ie_form is IntegralForm.GREEN:
        base = profile_convolution(
            profile.z_grid, profile.psi_values - beta2, profile.tail_value - beta2, z, t
        ) + beta2
        return np.asarray(base) + single

    base = profile_convolution(profile.z_grid, profile.psi_values, profile.tail_value, z, t)
    unit = np.ones_like(nu)
    double = np.array([_layer(float(point), t, traj, unit, front, double=True) for point in z])
    return np.asarray(base) - single / beta2 - beta2 * double


def reconstruct_field(traj: FreeBoundaryTrajectory, spec: ProblemSpec, t: float,
                      z_grid: Optional[Sequence[float]] = None, cfg: Optional[SolverConfig] = None,
                      attach_physical: bool = False) -> FieldSnapshot:
    """psi(., t) from the trajectory through the boundary integral representation.

    The default grid is `cfg.snapshot_points` equally spaced points on
    [zbar(t) - cfg.z_tail, zbar(t)].

    Args:
        traj: Solved trajectory
        spec: Problem data; ie_form picks the representation
        t: A node of traj.times
        z_grid: Evaluation points at or below zbar(t)
        cfg: Supplies the default grid
        attach_physical: Also return the parametric (x, theta) pair

    Returns:
        FieldSnapshot whose boundary_residual is |psi(zbar(t), t) - beta2|

    Raises:
        UsageError: If t is not a trajectory node
        DomainError: If a point lies beyond the front
    """
    index = traj.node_index(t)
    if index is None:
        raise UsageError(f"t = {t!r} is not a trajectory node")
    t = float(traj.times[index])
    front = float(traj.zbar[index])
    depth = cfg.z_tail if cfg is not None else SolverConfig.model_fields["z_tail"].default
    points = cfg.snapshot_points if cfg is not None else SolverConfig.model_fields["snapshot_points"].default
    if z_grid is None:
        z = np.linspace(front - depth, front, points)
    else:
        z = np.asarray(z_grid, dtype=float)
    if np.any(z > front + 1e-12 * max(1.0, abs(front))):
        raise DomainError(f"z lies beyond the front zbar({t:.6g}) = {front:.6g}")

    if index == 0:
        psi = spec.profile.psi_at(z)
        residual = abs(float(spec.profile.psi_at(front)) - spec.beta2)
    else:
        history = traj.prefix(index + 1)
        psi = _field(z, t, history, spec)
        residual = abs(float(_field(np.array([front]), t, history, spec)[0]) - spec.beta2)
    snapshot = FieldSnapshot(t=t, z_grid=z, psi=psi, boundary_residual=residual)
    logger.debug("field at t=%g: boundary residual %.3e", t, residual)

    if attach_physical:
        x, theta = x_from_z_parametric(snapshot, float(traj.s[index]), front)
        snapshot = FieldSnapshot(t=t, z_grid=z, psi=psi, x=x, theta=theta, boundary_residual=residual)
    return snapshot


def form_comparison(spec: ProblemSpec, cfg: SolverConfig, reference: FreeBoundaryTrajectory) -> pd.DataFrame:
    """Solve with both flux equations and measure each against a reference.

    A run that stalls is measured on the nodes it reached; its status says so.

    Args:
        spec: Problem data; its ie_form is overridden per row.
        cfg: Solver settings shared by both runs.
        reference: Trajectory to measure against, interpolated onto the solver nodes.

    Returns:
        One row per form with columns form, status, nodes, nu_error and zbar_error,
        the errors being sup-norms over the nodes inside the reference's time range.
    """
    rows = []
    for form in IntegralForm:
        variant = spec.model_copy(update={"ie_form": form})
        try:
            traj = solve(variant, cfg)
            status = "converged"
        except NonConvergenceError as exc:
            traj = exc.partial
            status = "stalled"
        except DegeneratePrefactorError as exc:
            logger.warning("%s form skipped: %s", form.value, exc)
            rows.append({"form": form.value, "status": "degenerate", "nodes": 0,
                         "nu_error": math.nan, "zbar_error": math.nan})
            continue
        inside = traj.times <= reference.times[-1] * (1.0 + 1e-12)
        nodes = traj.times[inside]
        nu_error = float(np.max(np.abs(traj.nu[inside] - np.interp(nodes, reference.times, reference.nu))))
        zbar_error = float(np.max(np.abs(traj.zbar[inside] - np.interp(nodes, reference.times, reference.zbar))))
        rows.append({"form": form.value, "status": status, "nodes": int(nodes.size),
                     "nu_error": nu_error, "zbar_error": zbar_error})
    table = pd.DataFrame(rows)
    logger.info("integral forms against the reference:\n%s", table.to_string(index=False))
    return table


def _common_nodes(trajectories: List[FreeBoundaryTrajectory]) -> np.ndarray:
    coarse = min(trajectories, key=len)
    horizon = min(float(traj.times[-1]) for traj in trajectories)
    return coarse.times[coarse.times <= horizon * (1.0 + 1e-12)]


def convergence_study(spec: ProblemSpec, cfg_base: SolverConfig, dts: Sequence[float],
                      reference: str = "oracle") -> pd.DataFrame:
    """Solve once per dt and tabulate the sup-error of nu on common nodes.

    reference="oracle" measures against the traveling front with the same
    beta1, beta2 and b_bar; reference="finest" against the run with the
    smallest dt. The observed order is log(e_prev/e)/log(dt_prev/dt).

    Args:
        spec: Problem data
        cfg_base: Settings shared by every run; dt is replaced per run
        dts: Non-increasing time steps
        reference: "oracle" or "finest"

    Returns:
        DataFrame with columns dt, error, zbar_error and order

    Raises:
        UsageError: If dts is empty or increasing, or reference is unknown
    """
    if reference not in ("oracle", "finest"):
        raise UsageError(f"unknown reference {reference!r}")
    if len(dts) < 1:
        raise UsageError("at least one dt is needed")
    if any(later > earlier for earlier, later in zip(dts, dts[1:])):
        raise UsageError("dts must be non-increasing")

    runs = []
    for dt in dts:
        cfg = SolverConfig.model_validate({**cfg_base.model_dump(), "dt": dt})
        runs.append(solve(spec, cfg))
    nodes = _common_nodes(runs)

    if reference == "oracle":
        exact = front_trajectory(make_front(spec.beta1, spec.beta2, spec.b_bar), spec.b, nodes)
        ref_nu, ref_zbar = exact.nu, exact.zbar
    else:
        ref_nu = np.interp(nodes, runs[-1].times, runs[-1].nu)
        ref_zbar = np.interp(nodes, runs[-1].times, runs[-1].zbar)

    rows = []
    for dt, traj in zip(dts, runs):
        error = float(np.max(np.abs(np.interp(nodes, traj.times, traj.nu) - ref_nu)))
        zbar_error = float(np.max(np.abs(np.interp(nodes, traj.times, traj.zbar) - ref_zbar)))
        rows.append({"dt": dt, "error": error, "zbar_error": zbar_error})
    table = pd.DataFrame(rows)

    order = [math.nan]
    for k in range(1, len(rows)):
        e_prev, e = rows[k - 1]["error"], rows[k]["error"]
        ratio = rows[k - 1]["dt"] / rows[k]["dt"]
        if e_prev > 0 and e > 0 and ratio > 1:
            order.append(math.log(e_prev / e) / math.log(ratio))
        else:
            order.append(math.nan)
    table["order"] = order
    logger.info("convergence study against %s:\n%s", reference, table.to_string(index=False))
    return table
