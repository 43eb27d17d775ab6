"""Initial-datum builders and the CSV formats shared by every command.

Tables are plain CSV preceded by `#` comment lines. Profile files carry
their scalar data as `key=value` tokens in those comments, e.g.
`# beta1=2 beta2=-2 b_bar=0.6931471805599453`.
"""
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from stefan.exceptions import ConfigurationError
from stefan.models.profile import LinearizedProfile, PhysicalProfile
from stefan.models.trajectory import FreeBoundaryTrajectory
from stefan.services.front_oracle import make_front

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
DEFAULT_POINTS = 4001
DEFAULT_COSINE_Z_MIN = -5.0


def front_profile(beta1: float, beta2: float, b_bar: float,
                  points: int = DEFAULT_POINTS, z_min: Optional[float] = None) -> LinearizedProfile:
    """psi_0 = beta1 (1 - exp(-V z)), the traveling front at t = 0.

    The default left edge puts the tail within 1e-7 of beta1.
    """
    front = make_front(beta1, beta2, b_bar)
    if z_min is None:
        z_min = -max(12.0, math.log(1e7 * beta1) / abs(front.V))
    z = np.linspace(z_min, b_bar, points)
    psi = -beta1 * np.expm1(-front.V * z)
    psi[-1] = beta2
    dpsi = beta1 * front.V * np.exp(-front.V * z)
    return LinearizedProfile(
        z_grid=z, psi_values=psi, dpsi_values=dpsi,
        tail_value=beta1, b_bar=b_bar, beta2=beta2,
    )


def cosine_profile(beta1: float, beta2: float, b_bar: float,
                   z_min: float = DEFAULT_COSINE_Z_MIN, points: int = DEFAULT_POINTS) -> LinearizedProfile:
    """Half-cosine from beta1 at z_min down to beta2 at b_bar, constant beta1 below."""
    if not z_min < b_bar:
        raise ConfigurationError(f"z_min = {z_min} must lie below b_bar = {b_bar}")
    width = b_bar - z_min
    z = np.linspace(z_min, b_bar, points)
    phase = math.pi * (z - z_min) / width
    jump = beta1 - beta2
    psi = beta2 + jump * (1.0 + np.cos(phase)) / 2.0
    dpsi = -jump * math.pi / (2.0 * width) * np.sin(phase)
    psi[0], psi[-1] = beta1, beta2
    dpsi[0] = dpsi[-1] = 0.0
    return LinearizedProfile(
        z_grid=z, psi_values=psi, dpsi_values=dpsi,
        tail_value=beta1, b_bar=b_bar, beta2=beta2,
    )


def _read_metadata(path: Path) -> Dict[str, float]:
    meta: Dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            for token in line[1:].split():
                key, sep, value = token.partition("=")
                if not sep:
                    continue
                try:
                    meta[key] = float(value)
                except ValueError:
                    continue
    return meta


def _require(meta: Dict[str, float], keys: Iterable[str], path: Path) -> None:
    missing = [key for key in keys if key not in meta]
    if missing:
        raise ConfigurationError(f"{path}: metadata comment lacks {', '.join(missing)}")


def _read_table(path: Path, columns: Iterable[str]) -> pd.DataFrame:
    if not path.exists():
        raise ConfigurationError(f"{path}: no such file")
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path}: missing columns {', '.join(missing)}")
    return frame


def read_linearized_csv(path) -> LinearizedProfile:
    """Columns z,psi,dpsi; metadata beta1, beta2, b_bar."""
    path = Path(path)
    frame = _read_table(path, ["z", "psi", "dpsi"])
    meta = _read_metadata(path)
    _require(meta, ["beta1", "beta2", "b_bar"], path)
    return LinearizedProfile(
        z_grid=frame["z"].to_numpy(),
        psi_values=frame["psi"].to_numpy(),
        dpsi_values=frame["dpsi"].to_numpy(),
        tail_value=meta["beta1"],
        b_bar=meta["b_bar"],
        beta2=meta["beta2"],
    )


def read_physical_csv(path) -> PhysicalProfile:
    """Columns x,theta; metadata beta1, beta2, b."""
    path = Path(path)
    frame = _read_table(path, ["x", "theta"])
    meta = _read_metadata(path)
    _require(meta, ["beta1", "beta2", "b"], path)
    profile = PhysicalProfile(
        x_grid=frame["x"].to_numpy(),
        theta_values=frame["theta"].to_numpy(),
        tail_value=meta["beta1"],
        beta2=meta["beta2"],
    )
    if abs(profile.b - meta["b"]) > 1e-9 * max(1.0, abs(meta["b"])):
        raise ConfigurationError(f"{path}: last x = {profile.b!r} differs from b = {meta['b']!r}")
    return profile


def write_table(frame: pd.DataFrame, path, header: Iterable[str] = ()) -> Path:
    """Write `frame` as CSV with 17 significant digits after `#` header lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in header:
            handle.write(line if line.startswith("#") else f"# {line}")
            handle.write("\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def write_linearized_csv(profile: LinearizedProfile, path, header: Iterable[str] = ()) -> Path:
    """
    Write a profile in the format read_linearized_csv expects.

    Args:
        profile: Samples to write
        path: Target file; parent directories are created
        header: Extra comment lines placed before the metadata line

    Returns:
        The path written
    """
    meta = f"# beta1={profile.tail_value!r} beta2={profile.beta2!r} b_bar={profile.b_bar!r}"
    frame = pd.DataFrame({"z": profile.z_grid, "psi": profile.psi_values, "dpsi": profile.dpsi_values})
    return write_table(frame, path, [*header, meta])


def write_physical_csv(profile: PhysicalProfile, path, header: Iterable[str] = ()) -> Path:
    meta = f"# beta1={profile.tail_value!r} beta2={profile.beta2!r} b={profile.b!r}"
    frame = pd.DataFrame({"x": profile.x_grid, "theta": profile.theta_values})
    return write_table(frame, path, [*header, meta])


def read_trajectory_csv(path) -> FreeBoundaryTrajectory:
    """
    Load a trajectory written by `solve`, `fd` or `oracle`.

    Args:
        path: CSV with columns t,nu,zbar,s,picard_iters after `#` comments

    Returns:
        FreeBoundaryTrajectory with the stored values

    Raises:
        ConfigurationError: If the file or a column is missing
    """
    path = Path(path)
    frame = _read_table(path, ["t", "nu", "zbar", "s", "picard_iters"])
    return FreeBoundaryTrajectory.from_frame(frame)
