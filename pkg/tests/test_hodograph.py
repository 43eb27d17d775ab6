"""Tests for the x <-> z transformations."""
import math

import numpy as np
import pytest

from stefan.exceptions import SingularTransformError, UsageError
from stefan.models.profile import PhysicalProfile
from stefan.models.trajectory import FieldSnapshot
from stefan.services.front_oracle import make_front, psi_front, x_front, zbar_front
from stefan.services.hodograph import (
    compatibility_residual,
    h_of_s,
    transform_profile,
    x_from_z,
    x_from_z_parametric,
    z_from_x,
)


def physical(x, theta, beta1=2.0, beta2=-2.0):
    return PhysicalProfile(x_grid=x, theta_values=theta, tail_value=beta1, beta2=beta2)


@pytest.fixture
def decreasing_profile():
    """theta_0 = 2 - x on [0, 1]."""
    x = np.linspace(0.0, 1.0, 10001)
    return physical(x, 2.0 - x)


class TestZFromX:
    """Tests for z_from_x."""

    def test_constant_theta(self):
        x = np.linspace(-2.0, 1.0, 301)
        profile = physical(x, np.full(x.size, 3.0))
        assert z_from_x(profile, 0.7, anchor=-1.0) == pytest.approx(1.7 / 3.0, abs=1e-12)
        assert z_from_x(profile, -1.5, anchor=0.0) == pytest.approx(-0.5, abs=1e-12)

    def test_closed_form(self, decreasing_profile):
        assert z_from_x(decreasing_profile, 1.0) == pytest.approx(math.log(2.0), abs=1e-8)

    def test_monotone_while_positive(self, decreasing_profile):
        values = [z_from_x(decreasing_profile, x) for x in np.linspace(0.0, 1.0, 21)]
        assert np.all(np.diff(values) > 0)

    def test_sign_change_reports_interval(self):
        x = np.linspace(0.0, 2.0, 201)
        profile = physical(x, 1.0 - x + 1e-3)
        with pytest.raises(SingularTransformError) as info:
            z_from_x(profile, 2.0)
        lo, hi = info.value.interval
        assert lo <= 1.001 <= hi

    def test_outside_samples_rejected(self, decreasing_profile):
        with pytest.raises(UsageError):
            z_from_x(decreasing_profile, 1.5)


class TestHOfS:
    """Tests for h_of_s."""

    def test_empty_integral(self, decreasing_profile):
        assert h_of_s(decreasing_profile, 0.0) == 0.0

    def test_constant_theta(self):
        x = np.linspace(-1.0, 1.0, 101)
        profile = physical(x, np.full(x.size, -2.0))
        assert h_of_s(profile, 0.6) == pytest.approx(-0.3, abs=1e-12)

    def test_closed_form(self, decreasing_profile):
        assert h_of_s(decreasing_profile, 1.0) == pytest.approx(math.log(2.0), abs=1e-8)

    def test_additive(self):
        x = np.linspace(0.0, 1.0, 1001)
        profile = physical(x, 2.0 + np.sin(3 * x))
        s1, s2 = x[500], 0.83
        assert h_of_s(profile, s2) == pytest.approx(h_of_s(profile, s1) + z_from_x(profile, s2, anchor=s1), abs=1e-12)


class TestTransformProfile:
    """Tests for transform_profile."""

    def test_constant_theta(self):
        x = np.linspace(-1.0, 1.0, 41)
        lin = transform_profile(physical(x, np.full(x.size, 4.0)))
        np.testing.assert_allclose(lin.z_grid, x / 4.0, atol=1e-14)
        np.testing.assert_array_equal(lin.psi_values, np.full(x.size, 4.0))
        np.testing.assert_allclose(lin.dpsi_values, 0.0, atol=1e-12)

    def test_exponential_image(self, decreasing_profile):
        lin = transform_profile(decreasing_profile)
        assert lin.b_bar == pytest.approx(math.log(2.0), abs=1e-8)
        np.testing.assert_allclose(lin.z_grid, -np.log((2.0 - decreasing_profile.x_grid) / 2.0), atol=1e-8)
        np.testing.assert_allclose(lin.psi_values, 2.0 * np.exp(-lin.z_grid), atol=1e-7)
        np.testing.assert_allclose(lin.dpsi_values, -lin.psi_values, atol=1e-10)

    def test_values_preserved(self, decreasing_profile):
        lin = transform_profile(decreasing_profile)
        np.testing.assert_array_equal(lin.psi_values, decreasing_profile.theta_values)

    def test_round_trip(self, decreasing_profile):
        lin = transform_profile(decreasing_profile)
        np.testing.assert_allclose(x_from_z(lin, lin.z_grid), decreasing_profile.x_grid, rtol=0, atol=1e-8)

    def test_sign_change_rejected(self):
        x = np.linspace(-1.0, 1.0, 101)
        with pytest.raises(SingularTransformError):
            transform_profile(physical(x, -x + 0.013))


class TestXFromZParametric:
    """Tests for x_from_z_parametric."""

    def test_anchor_point(self):
        z = np.linspace(-2.0, 0.5, 51)
        snap = FieldSnapshot(t=0.1, z_grid=z, psi=2.0 - 4.0 * (z + 2.0) / 2.5)
        x, theta = x_from_z_parametric(snap, 0.8, 0.5)
        assert x[-1] == 0.8
        assert theta[-1] == pytest.approx(-2.0)

    def test_constant_psi_is_a_line(self):
        z = np.linspace(-1.0, 0.3, 27)
        snap = FieldSnapshot(t=0.0, z_grid=z, psi=np.full(z.size, 1.5))
        x, _ = x_from_z_parametric(snap, 2.0, 0.3)
        np.testing.assert_allclose(x, 2.0 - 1.5 * (0.3 - z), atol=1e-14)

    def test_front_profile(self):
        z = np.concatenate((np.linspace(-3.0, 0.0, 30001), np.linspace(0.0, math.log(2.0), 7001)[1:]))
        snap = FieldSnapshot(t=0.0, z_grid=z, psi=2.0 * (1.0 - np.exp(z)))
        x, _ = x_from_z_parametric(snap, 1.0, math.log(2.0))
        assert np.interp(0.0, z, x) == pytest.approx(1.0 - (2.0 * math.log(2.0) - 2.0), abs=1e-6)

    def test_grid_must_end_at_front(self):
        z = np.linspace(-1.0, 0.0, 11)
        snap = FieldSnapshot(t=0.0, z_grid=z, psi=np.ones(11))
        with pytest.raises(UsageError):
            x_from_z_parametric(snap, 1.0, 0.5)

    def test_front_parametric_pair_satisfies_dz_dx(self):
        front = make_front(2.0, -2.0, math.log(2.0))
        t = 0.1
        z = np.linspace(-3.0, float(zbar_front(front, t)), 3001)
        x = x_front(front, z, t)
        theta = psi_front(front, z, t)
        dx_dz = np.gradient(x, z)
        np.testing.assert_allclose(dx_dz[1:-1], theta[1:-1], atol=1e-4)


class TestCompatibilityResidual:
    """Tests for compatibility_residual."""

    def test_exact_front(self):
        front = make_front(2.0, -2.0, math.log(2.0))
        times = [0.100, 0.101, 0.102]
        z = np.linspace(-3.0, float(zbar_front(front, times[-1])), 341)
        snaps = [FieldSnapshot(t=t, z_grid=z, psi=psi_front(front, z, t)) for t in times]
        assert compatibility_residual(snaps) < 1e-3

    def test_constant_and_linear_fields(self):
        z = np.linspace(-1.0, 1.0, 21)
        constant = [FieldSnapshot(t=t, z_grid=z, psi=np.full(z.size, 0.3)) for t in (0.0, 0.1, 0.2)]
        assert compatibility_residual(constant) == 0.0
        linear = [FieldSnapshot(t=t, z_grid=z, psi=1.0 - 2.0 * z) for t in (0.0, 0.1, 0.2)]
        assert compatibility_residual(linear) < 1e-12

    def test_needs_three_snapshots(self):
        z = np.linspace(0.0, 1.0, 5)
        snaps = [FieldSnapshot(t=t, z_grid=z, psi=z) for t in (0.0, 0.1)]
        with pytest.raises(UsageError):
            compatibility_residual(snaps)

    def test_mismatched_grids(self):
        snaps = [
            FieldSnapshot(t=0.0, z_grid=np.linspace(0.0, 1.0, 5), psi=np.zeros(5)),
            FieldSnapshot(t=0.1, z_grid=np.linspace(0.0, 1.0, 6), psi=np.zeros(6)),
            FieldSnapshot(t=0.2, z_grid=np.linspace(0.0, 1.0, 5), psi=np.zeros(5)),
        ]
        with pytest.raises(UsageError):
            compatibility_residual(snaps)
