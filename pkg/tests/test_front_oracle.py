"""Tests for the traveling-front oracle."""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from stefan.exceptions import DomainError
from stefan.models.front import FrontSolution
from stefan.services.front_oracle import (
    consistency_residual,
    dpsi_front,
    front_snapshot,
    front_trajectory,
    make_front,
    psi_front,
    s_front,
    x_front,
    zbar_front,
)

LN2 = math.log(2.0)


@pytest.fixture
def front():
    return make_front(2.0, -2.0, LN2)


class TestMakeFront:
    """Tests for make_front."""

    def test_unit_parameters(self):
        f = make_front(1.0, -1.0, LN2)
        assert f.V == pytest.approx(-1.0, rel=1e-14)
        assert f.nu_const == pytest.approx(-2.0, rel=1e-14)
        assert f.s_dot == pytest.approx(-2.0, rel=1e-14)

    def test_consistency_locus_parameters(self, front):
        assert front.V == pytest.approx(-1.0, rel=1e-14)
        assert front.nu_const == pytest.approx(-4.0, rel=1e-14)
        assert front.s_dot == pytest.approx(-2.0, rel=1e-14)
        assert front.alpha == pytest.approx(2.0, rel=1e-14)
        assert front.s_dot == pytest.approx(front.alpha * front.V, rel=1e-14)

    def test_wide_front_is_slow(self):
        assert -1e-6 < make_front(2.0, -2.0, 1e7).V < 0

    @pytest.mark.parametrize("args", [(0.0, -1.0, 1.0), (1.0, 0.5, 1.0), (1.0, -1.0, 0.0)])
    def test_sign_violations(self, args):
        with pytest.raises(DomainError):
            make_front(*args)

    def test_inconsistent_solution_rejected(self):
        with pytest.raises(ValidationError):
            FrontSolution(beta1=2.0, beta2=-2.0, b_bar=LN2, V=-0.5, nu_const=-2.0, s_dot=-1.0, alpha=2.0)


class TestPsiFront:
    """Tests for psi_front and zbar_front."""

    def test_zero_level_set(self, front):
        assert psi_front(front, front.V * 0.2, 0.2) == pytest.approx(0.0, abs=1e-15)

    def test_value(self, front):
        assert psi_front(front, -1.0, 0.0) == pytest.approx(1.2642411, abs=1e-7)

    def test_boundary_value_on_the_front(self, front):
        for t in np.random.default_rng(11).uniform(0, 2, 10):
            assert psi_front(front, zbar_front(front, t), t) == pytest.approx(-2.0, abs=1e-12)

    def test_far_field(self, front):
        assert psi_front(front, -60.0, 0.5) == pytest.approx(2.0, abs=1e-12)

    def test_beyond_front_rejected(self, front):
        with pytest.raises(DomainError):
            psi_front(front, 1.0, 0.0)

    def test_zbar(self, front):
        assert zbar_front(front, 0.0) == LN2
        assert zbar_front(front, 0.3) == pytest.approx(0.3931472, abs=1e-7)

    def test_solves_heat_equation(self, front):
        z, t, h = -0.4, 0.2, 1e-4
        psi_t = (psi_front(front, z, t + h) - psi_front(front, z, t - h)) / (2 * h)
        psi_zz = (psi_front(front, z + h, t) - 2 * psi_front(front, z, t) + psi_front(front, z - h, t)) / h ** 2
        assert abs(psi_t - psi_zz) < 1e-6

    def test_constant_flux_along_front(self, front):
        for t in (0.0, 0.1, 0.7):
            assert dpsi_front(front, zbar_front(front, t), t) == pytest.approx(front.nu_const, rel=1e-12)


class TestXFront:
    """Tests for x_front."""

    def test_anchor(self, front):
        assert x_front(front, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_value(self, front):
        assert x_front(front, LN2, 0.0) == pytest.approx(2.0 * (LN2 - 1.0), abs=1e-12)

    def test_matches_trapezoid(self, front):
        t = 0.15
        z = np.linspace(0.0, float(zbar_front(front, t)), 2001)
        numeric = np.trapezoid(psi_front(front, z, t), z)
        assert x_front(front, z[-1], t) == pytest.approx(numeric, abs=1e-6)


class TestConsistencyResidual:
    """Tests for consistency_residual."""

    def test_on_locus(self, front):
        assert consistency_residual(front) == 0.0

    def test_off_locus(self):
        assert consistency_residual(make_front(1.0, -1.0, LN2)) == 1.0

    @pytest.mark.parametrize("beta1", [1.5, 3.0, 10.0])
    def test_locus_family(self, beta1):
        f = make_front(beta1, beta1 / (1.0 - beta1), 1.0)
        assert consistency_residual(f) == pytest.approx(0.0, abs=1e-12)


class TestFrontTables:
    """Tests for the oracle trajectory and snapshot builders."""

    def test_trajectory(self, front):
        times = np.linspace(0.0, 0.3, 31)
        traj = front_trajectory(front, 1.0, times)
        np.testing.assert_allclose(traj.zbar, LN2 - times, atol=1e-14)
        np.testing.assert_allclose(traj.s, 1.0 - 2.0 * times, atol=1e-14)
        np.testing.assert_allclose(traj.s, 1.0 - front.nu_const * times / front.beta2, atol=1e-14)
        assert s_front(front, 1.0, 0.3) == pytest.approx(0.4)

    def test_snapshot(self, front):
        snap = front_snapshot(front, 0.2, depth=5.0, points=101)
        assert snap.z_grid[-1] == pytest.approx(LN2 - 0.2)
        assert snap.boundary_residual < 1e-12
        np.testing.assert_array_equal(snap.theta, snap.psi)
