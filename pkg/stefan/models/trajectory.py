"""Solver outputs: the free-boundary time series and field snapshots."""
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stefan.models.arrays import FloatArray, IntArray, strictly_increasing

TRAJECTORY_COLUMNS = ["t", "nu", "zbar", "s", "picard_iters"]


class FreeBoundaryTrajectory(BaseModel):
    """nu(t), zbar(t) and s(t) on the time nodes 0 = t_0 < ... < t_N."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: FloatArray
    nu: FloatArray = Field(description="Flux psi_z at the front")
    zbar: FloatArray = Field(description="Front position in z")
    s: FloatArray = Field(description="Front position in x")
    picard_iters: IntArray = Field(description="Iterations used per node (0 at t_0)")

    @model_validator(mode="after")
    def _check_columns(self):
        n = self.times.size
        if n < 1:
            raise ValueError("a trajectory needs at least the initial node")
        for name in ("nu", "zbar", "s", "picard_iters"):
            if getattr(self, name).size != n:
                raise ValueError(f"column {name} has the wrong length")
        if self.times[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if not strictly_increasing(self.times):
            raise ValueError("times must be strictly increasing")
        return self

    def __len__(self) -> int:
        return int(self.times.size)

    def prefix(self, count: int) -> "FreeBoundaryTrajectory":
        """The first `count` nodes."""
        return FreeBoundaryTrajectory(
            times=self.times[:count],
            nu=self.nu[:count],
            zbar=self.zbar[:count],
            s=self.s[:count],
            picard_iters=self.picard_iters[:count],
        )

    def node_index(self, t: float, rtol: float = 1e-9) -> Optional[int]:
        """Index of the node equal to t, or None."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) <= rtol * max(1.0, abs(t)):
            return i
        return None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "nu": self.nu,
            "zbar": self.zbar,
            "s": self.s,
            "picard_iters": self.picard_iters,
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "FreeBoundaryTrajectory":
        missing = [c for c in TRAJECTORY_COLUMNS if c not in frame.columns]
        if missing:
            raise ValueError(f"trajectory table lacks columns: {', '.join(missing)}")
        return cls(
            times=frame["t"].to_numpy(),
            nu=frame["nu"].to_numpy(),
            zbar=frame["zbar"].to_numpy(),
            s=frame["s"].to_numpy(),
            picard_iters=frame["picard_iters"].to_numpy(),
        )


class FieldSnapshot(BaseModel):
    """psi(z, t) on a grid ending at zbar(t), optionally with parametric (x, theta)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    z_grid: FloatArray
    psi: FloatArray
    x: Optional[FloatArray] = None
    theta: Optional[FloatArray] = None
    boundary_residual: Optional[float] = Field(
        default=None, description="|psi(zbar(t), t) - beta2|, checked a posteriori"
    )

    @model_validator(mode="after")
    def _check_grid(self):
        n = self.z_grid.size
        if n < 2:
            raise ValueError("a snapshot needs at least two points")
        if self.psi.size != n:
            raise ValueError("z_grid and psi differ in length")
        if not strictly_increasing(self.z_grid):
            raise ValueError("z_grid must be strictly increasing")
        for name in ("x", "theta"):
            column = getattr(self, name)
            if column is not None and column.size != n:
                raise ValueError(f"{name} has the wrong length")
        return self

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"z": self.z_grid, "psi": self.psi})
        if self.x is not None:
            frame["x"] = self.x
        if self.theta is not None:
            frame["theta"] = self.theta
        return frame
