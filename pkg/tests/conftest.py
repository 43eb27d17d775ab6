"""Pytest configuration and fixtures."""
import math

import pytest
from typer.testing import CliRunner

from stefan.models.problem import ProblemSpec, SolverConfig
from stefan.services.profiles import cosine_profile, front_profile
from stefan.services.stefan_ie import solve

BETA1 = 2.0
BETA2 = -2.0
B_BAR = math.log(2.0)
B = 1.0


@pytest.fixture(scope="session")
def front_spec():
    """Traveling front on the consistency locus beta1 + beta1 beta2 - beta2 = 0."""
    return ProblemSpec(profile=front_profile(BETA1, BETA2, B_BAR), beta1=BETA1, beta2=BETA2, b=B)


@pytest.fixture(scope="session")
def front_config():
    return SolverConfig(dt=1e-3, t_end=0.3)


@pytest.fixture(scope="session")
def front_run(front_spec, front_config):
    return solve(front_spec, front_config)


@pytest.fixture(scope="session")
def cosine_spec():
    """Smooth datum from beta1 at z = -5 down to beta2 at b_bar."""
    return ProblemSpec(profile=cosine_profile(BETA1, BETA2, B_BAR), beta1=BETA1, beta2=BETA2, b=B)


@pytest.fixture
def runner():
    """Typer test runner for the command-line app."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration file from lines and return its path."""
    def _write(*lines, name="run.cfg"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    return _write
