"""Run manifest written next to every set of outputs."""
from enum import Enum
from pathlib import Path
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field


class Command(str, Enum):
    SOLVE = "solve"
    ORACLE = "oracle"
    CERTIFY = "certify"
    FD = "fd"
    COMPARE = "compare"
    CONVERGENCE = "convergence"


class RunManifest(BaseModel):
    """Resolved command, inputs and parameter echo of one CLI run."""
    model_config = ConfigDict(frozen=True)

    command: Command
    config_path: Path
    output_dir: Path
    seed: int = 0
    version: str
    config_hash: str = Field(description="sha256 over command, seed and the resolved parameters")
    parameters: Dict[str, str] = Field(description="Every resolved key, defaults included")

    @property
    def run_dir(self) -> Path:
        return self.output_dir / f"{self.command.value}-{self.config_hash[:12]}"

    def header(self) -> str:
        """Comment line carried by every CSV of the run."""
        law = self.parameters.get("problem.law", "")
        ktau = self.parameters.get("solver.ktau_mode", "")
        form = self.parameters.get("problem.form", "")
        return (
            f"# stefan-front {self.version} command={self.command.value} "
            f"config_hash={self.config_hash} law={law} ktau_mode={ktau} form={form}"
        )
