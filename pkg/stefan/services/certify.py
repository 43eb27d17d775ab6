"""Contraction constants, the certified existence window and its empirical check.

The constants follow the sup-norm estimates of the solution operator T on
the ball S_M = {||nu|| <= M}: T maps S_M into itself for t <= sigma1,
sigma2 and is a contraction with factor sqrt(sigma) B8 for t <= sigma3.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from stefan.exceptions import DomainError, OutOfRegimeError, UsageError
from stefan.models.certificate import (
    FLAG_B2_BINDING,
    FLAG_EXP_OVERFLOW,
    FLAG_VACUOUS,
    BoundSet,
    Certificate,
    CertificateConstants,
    ContractionStats,
)
from stefan.models.problem import ProblemSpec, SolverConfig
from stefan.models.profile import LinearizedProfile
from stefan.models.trajectory import FreeBoundaryTrajectory
from stefan.services.kernel import SQRT_PI
from stefan.services.stefan_ie import flux_operator

logger = logging.getLogger(__name__)

# Windows shorter than this are reported as vacuous.
VACUOUS_WINDOW = 1e-12
DEFAULT_CONTRACTION_STEPS = 16


def default_b2(b_bar: float) -> float:
    """1/(2 sqrt(pi) b_bar), the default for the user-supplied constant B2."""
    if not b_bar > 0:
        raise DomainError(f"the default B2 needs b_bar > 0, got {b_bar}")
    return 1.0 / (2.0 * SQRT_PI * b_bar)


def constants(profile: LinearizedProfile, beta2: float) -> CertificateConstants:
    """A1 = ||psi_0'||/sqrt(pi), M = 2 A1 + 1, B3 = (1 + 1/|beta2|)/|beta2|, B1 = M B3."""
    size = abs(beta2)
    if not size > 0.5:
        raise OutOfRegimeError(f"certificate constants need |beta2| > 1/2, got {beta2}")
    dpsi_norm = profile.dpsi_norm
    psi_norm = profile.psi_norm
    A1 = dpsi_norm / SQRT_PI
    M = 2.0 * A1 + 1.0
    B3 = (1.0 + 1.0 / size) / size
    return CertificateConstants(A1=A1, M=M, B1=M * B3, B3=B3, psi_norm=psi_norm, dpsi_norm=dpsi_norm)


def bound_set(consts: CertificateConstants, beta2: float) -> BoundSet:
    """B4..B8; exp(B1^2) overflow turns B6 and B8 into inf and is flagged."""
    size = abs(beta2)
    B1, B3, M = consts.B1, consts.B3, consts.M
    flags = []
    try:
        growth = math.exp(B1 * B1)
    except OverflowError:
        growth = math.inf
        flags.append(FLAG_EXP_OVERFLOW)
    B4 = consts.psi_norm * B1 * B3 / (4.0 * SQRT_PI)
    B5 = consts.dpsi_norm * B3 / (2.0 * SQRT_PI)
    B6 = (B1 / SQRT_PI + 3.0 * M / (SQRT_PI * size) + 0.25 * size * B1 * B3 * growth) / size
    B7 = size * B1 * B3 / (4.0 * SQRT_PI)
    return BoundSet(B4=B4, B5=B5, B6=B6, B7=B7, B8=B4 + B5 + B6 + B7, flags=tuple(flags))


def window(consts: CertificateConstants, bounds: BoundSet, beta2: float,
           psi0_at_bbar: float, B2: float) -> Tuple[float, float, float, float]:
    """(sigma1, sigma2, sigma3, sigma).

    sigma1: (|beta2| + |psi_0(b_bar)|) B2 sigma < 1/4
    sigma2: M B1 sqrt(sigma) < |beta2| sqrt(pi) / 4
    sigma3: sqrt(sigma) B8 < 1
    """
    if not B2 > 0:
        raise DomainError(f"B2 must be positive, got {B2}")
    if not (consts.M > 0 and consts.B1 > 0 and bounds.B8 > 0):
        raise DomainError("M, B1 and B8 must be positive")
    size = abs(beta2)
    sigma1 = 1.0 / (4.0 * B2 * (size + abs(psi0_at_bbar)))
    sigma2 = (size * SQRT_PI / (4.0 * consts.M * consts.B1)) ** 2
    sigma3 = 0.0 if math.isinf(bounds.B8) else 1.0 / bounds.B8 ** 2
    return sigma1, sigma2, sigma3, min(sigma1, sigma2, sigma3)


def certify(profile: LinearizedProfile, beta2: float, B2: Optional[float] = None) -> Certificate:
    """
    Compute every constant and the certified window for one datum.

    Args:
        profile: Linearized datum supplying sup|psi_0|, sup|psi_0'| and psi_0(b_bar)
        beta2: Front value, |beta2| > 1/2
        B2: Bound constant of the sigma1 condition; defaults to default_b2(b_bar)

    Returns:
        Certificate with A1..B8, sigma1..sigma3, sigma and the raised flags

    Raises:
        OutOfRegimeError: If |beta2| <= 1/2
        DomainError: If B2 is not positive or b_bar <= 0 with the default B2
    """
    if B2 is None:
        B2 = default_b2(profile.b_bar)
    consts = constants(profile, beta2)
    bounds = bound_set(consts, beta2)
    psi0_at_bbar = float(profile.psi_values[-1])
    sigma1, sigma2, sigma3, sigma = window(consts, bounds, beta2, psi0_at_bbar, B2)

    flags = list(bounds.flags)
    if sigma == sigma1:
        flags.append(FLAG_B2_BINDING)
    if sigma < VACUOUS_WINDOW:
        flags.append(FLAG_VACUOUS)
    cert = Certificate(
        A1=consts.A1, M=consts.M, B1=consts.B1, B2=B2, B3=consts.B3,
        B4=bounds.B4, B5=bounds.B5, B6=bounds.B6, B7=bounds.B7, B8=bounds.B8,
        sigma1=sigma1, sigma2=sigma2, sigma3=sigma3, sigma=sigma,
        norms={"psi_norm": consts.psi_norm, "dpsi_norm": consts.dpsi_norm},
        flags=tuple(flags),
    )
    logger.info("certified window sigma=%.6g (flags: %s)", sigma, "; ".join(flags) or "none")
    return cert


def spot_check(traj: FreeBoundaryTrajectory, spec: ProblemSpec, cert: Certificate) -> pd.DataFrame:
    """Compare a computed trajectory with the a-priori bounds.

    |nu| <= M, |zbar(t) - b_bar| <= B1 t and |zbar'| <= B3 M. Violations
    are reported and logged, never raised.
    """
    t = traj.times
    rows = [("|nu| <= M", cert.M, float(np.max(np.abs(traj.nu))))]
    drift = np.abs(traj.zbar - spec.b_bar)
    rows.append(("|zbar - b_bar| <= B1 t", 0.0, float(np.max(drift - cert.B1 * t))))
    if t.size > 1:
        speed = float(np.max(np.abs(np.diff(traj.zbar) / np.diff(t))))
    else:
        speed = 0.0
    rows.append(("|zbar'| <= B3 M", cert.B3 * cert.M, speed))

    frame = pd.DataFrame(rows, columns=["check", "bound", "observed"])
    frame["violated"] = frame["observed"] > frame["bound"]
    for row in frame[frame["violated"]].itertuples():
        logger.warning("bound violated: %s (observed %.6g, bound %.6g)", row.check, row.observed, row.bound)
    return frame


def empirical_contraction(spec: ProblemSpec, cfg: SolverConfig, cert: Certificate, trials: int,
                          seed: int = 0, steps: int = DEFAULT_CONTRACTION_STEPS,
                          horizon: Optional[float] = None) -> ContractionStats:
    """Apply the discrete T to random pairs of flux curves in S_M.

    The curves live on `steps` equal intervals of [0, horizon]; node values
    are uniform in [-M, M]. Pairs with identical curves are left out of the
    statistics.

    Args:
        spec: Problem data defining T.
        cfg: Supplies t_end and the K_tau mode.
        cert: Certificate providing M and sigma.
        trials: Number of random pairs.
        seed: Seed of the numpy generator.
        steps: Time intervals per curve.
        horizon: End of the time range; defaults to min(sigma, t_end). A longer
            horizon measures T outside the certified window.

    Returns:
        Max and mean of ||T nu - T nu_hat|| / ||nu - nu_hat|| over the pairs.

    Raises:
        UsageError: If the horizon is empty or trials or steps is not positive.
    """
    if horizon is None:
        horizon = min(cert.sigma, cfg.t_end)
    if not horizon > 0:
        raise UsageError("the certified window is empty")
    if trials < 1 or steps < 1:
        raise UsageError("trials and steps must be positive")
    times = np.linspace(0.0, horizon, steps + 1)
    rng = np.random.default_rng(seed)

    ratios = []
    for _ in range(trials):
        nu = rng.uniform(-cert.M, cert.M, times.size)
        nu_hat = rng.uniform(-cert.M, cert.M, times.size)
        gap = float(np.max(np.abs(nu - nu_hat)))
        if gap == 0.0:
            continue
        image = flux_operator(spec, times, nu, cfg.ktau_mode)
        image_hat = flux_operator(spec, times, nu_hat, cfg.ktau_mode)
        ratios.append(float(np.max(np.abs(image - image_hat))) / gap)

    if ratios:
        stats = ContractionStats(max_ratio=max(ratios), mean_ratio=float(np.mean(ratios)),
                                 trials=len(ratios), horizon=horizon, steps=steps)
    else:
        stats = ContractionStats(max_ratio=0.0, mean_ratio=0.0, trials=0, horizon=horizon, steps=steps)
    logger.info("contraction ratios over %d pairs: max %.6g, mean %.6g",
                stats.trials, stats.max_ratio, stats.mean_ratio)
    return stats
