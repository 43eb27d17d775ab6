"""Run configuration: a flat `section.key = value` file.

Example:

    # traveling front on the consistency locus
    problem.beta1 = 2
    problem.beta2 = -2
    problem.b_bar = 0.6931471805599453
    problem.law = frozen_h
    solver.dt = 1e-3
    solver.t_end = 0.3
"""
import hashlib
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from stefan.exceptions import ConfigurationError, StefanError
from stefan.models.problem import (
    PREFACTOR_FLOOR,
    BoundaryLaw,
    FdConfig,
    IntegralForm,
    ProblemSpec,
    SolverConfig,
)
from stefan.services.profiles import (
    DEFAULT_COSINE_Z_MIN,
    DEFAULT_POINTS,
    cosine_profile,
    front_profile,
    read_linearized_csv,
    read_physical_csv,
)

logger = logging.getLogger(__name__)

# Keys holding comma separated lists.
LIST_KEYS = {"solver.snapshot_times", "convergence.dts"}


class ProblemSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    beta1: float
    beta2: float
    b_bar: Optional[float] = None
    b: float = 1.0
    law: BoundaryLaw = BoundaryLaw.FROZEN_H
    form: IntegralForm = IntegralForm.GREEN
    profile: Literal["front", "cosine", "csv"] = "front"
    profile_path: Optional[Path] = None
    physical_profile_path: Optional[Path] = None
    z_min: Optional[float] = None
    profile_points: int = Field(default=DEFAULT_POINTS, ge=2)

    @field_validator("beta1")
    @classmethod
    def _positive_beta1(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("beta1 must be positive")
        return value

    @field_validator("beta2")
    @classmethod
    def _negative_beta2(cls, value: float) -> float:
        if not value < 0:
            raise ValueError("beta2 must be negative")
        if abs(1.0 + 1.0 / (2.0 * value)) < PREFACTOR_FLOOR:
            raise ValueError("beta2 makes 1 + 1/(2*beta2) vanish")
        return value


class CertifySection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    B2: Optional[float] = Field(default=None, gt=0)
    trials: int = Field(default=100, ge=1)
    steps: int = Field(default=16, ge=1)


class ConvergenceSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    dts: Tuple[float, ...] = (4e-3, 2e-3, 1e-3)
    reference: Literal["oracle", "finest"] = "oracle"


SECTIONS: Dict[str, Type[BaseModel]] = {
    "problem": ProblemSection,
    "solver": SolverConfig,
    "fd": FdConfig,
    "certify": CertifySection,
    "convergence": ConvergenceSection,
}


class RunConfig(BaseModel):
    """Every section of a parsed configuration file plus its provenance."""
    model_config = ConfigDict(frozen=True)

    source: Path
    problem: ProblemSection
    solver: SolverConfig
    fd: FdConfig = FdConfig()
    certify: CertifySection = CertifySection()
    convergence: ConvergenceSection = ConvergenceSection()
    echo: Dict[str, str] = Field(default_factory=dict, description="Resolved keys, defaults included")
    lines: Dict[str, int] = Field(default_factory=dict)


def _read_entries(path: Path) -> Dict[str, Tuple[str, int]]:
    entries: Dict[str, Tuple[str, int]] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigurationError(f"expected 'section.key = value', got {raw.strip()!r}", line=lineno)
            section, dot, name = key.partition(".")
            if not dot or not name:
                raise ConfigurationError(f"key {key!r} has no section prefix", line=lineno)
            if section not in SECTIONS:
                raise ConfigurationError(f"unknown section {section!r}", line=lineno)
            if name not in SECTIONS[section].model_fields:
                raise ConfigurationError(f"unknown key {key!r}", line=lineno)
            if key in entries:
                raise ConfigurationError(f"duplicate key {key!r} (first set on line {entries[key][1]})", line=lineno)
            entries[key] = (value, lineno)
    return entries


def _coerce(key: str, value: str):
    if key in LIST_KEYS:
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


def _build_section(section: str, entries: Dict[str, Tuple[str, int]]) -> Optional[BaseModel]:
    prefix = f"{section}."
    values = {key[len(prefix):]: _coerce(key, value) for key, (value, _) in entries.items() if key.startswith(prefix)}
    if not values and section not in ("problem", "solver"):
        return None
    try:
        return SECTIONS[section].model_validate(values)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else ""
        key = f"{prefix}{field}" if field else section
        line = entries.get(key, (None, None))[1]
        raise ConfigurationError(f"{key}: {error['msg']}", line=line) from exc
    except StefanError as exc:
        raise ConfigurationError(f"{section}: {exc}") from exc


def _render(value) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (tuple, list)):
        return ",".join(_render(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def parse_config(path) -> RunConfig:
    """Parse and validate a configuration file.

    Args:
        path: Location of the `section.key = value` file

    Returns:
        RunConfig with every section resolved and an echo of all keys

    Raises:
        ConfigurationError: unreadable file, unknown or duplicate keys,
            invalid values (with the offending line number)
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: no such configuration file")
    entries = _read_entries(path)
    sections = {name: _build_section(name, entries) for name in SECTIONS}
    sections = {name: model for name, model in sections.items() if model is not None}

    echo: Dict[str, str] = {}
    for name, model in sections.items():
        for field, value in model.model_dump().items():
            echo[f"{name}.{field}"] = _render(value)
    for name in ("fd", "certify", "convergence"):
        if name not in sections:
            for field, value in SECTIONS[name]().model_dump().items():
                echo[f"{name}.{field}"] = _render(value)

    logger.debug("parsed %s: %d keys", path, len(entries))
    return RunConfig(
        source=path,
        echo=dict(sorted(echo.items())),
        lines={key: line for key, (_, line) in entries.items()},
        **sections,
    )


def _resolve(run_config: RunConfig, path: Path) -> Path:
    return path if path.is_absolute() else run_config.source.parent / path


def build_problem(run_config: RunConfig) -> ProblemSpec:
    """Assemble the ProblemSpec described by the [problem] keys."""
    section = run_config.problem
    lines = run_config.lines

    def need(key: str):
        value = getattr(section, key)
        if value is None:
            raise ConfigurationError(f"problem.{key} is required for profile={section.profile}")
        return value

    try:
        if section.profile == "front":
            profile = front_profile(section.beta1, section.beta2, need("b_bar"),
                                    points=section.profile_points, z_min=section.z_min)
        elif section.profile == "cosine":
            z_min = DEFAULT_COSINE_Z_MIN if section.z_min is None else section.z_min
            profile = cosine_profile(section.beta1, section.beta2, need("b_bar"),
                                     z_min=z_min, points=section.profile_points)
        else:
            profile = read_linearized_csv(_resolve(run_config, need("profile_path")))
        physical = None
        if section.physical_profile_path is not None:
            physical = read_physical_csv(_resolve(run_config, section.physical_profile_path))
        return ProblemSpec(
            profile=profile,
            beta1=section.beta1,
            beta2=section.beta2,
            b=section.b,
            boundary_law=section.law,
            ie_form=section.form,
            physical_profile=physical,
        )
    except ConfigurationError:
        raise
    except (ValidationError, StefanError) as exc:
        raise ConfigurationError(f"problem: {exc}", line=lines.get("problem.profile")) from exc


def config_hash(command: str, seed: int, echo: Dict[str, str]) -> str:
    """sha256 over the command, the seed and the sorted parameter echo."""
    payload = json.dumps({"command": command, "seed": seed, "parameters": echo}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
