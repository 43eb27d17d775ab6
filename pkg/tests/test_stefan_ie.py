"""Tests for the Volterra solver."""
import math

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid
from scipy.special import erfc

from stefan.exceptions import (
    DegeneratePrefactorError,
    DomainError,
    NonConvergenceError,
    SingularTransformError,
    UsageError,
)
from stefan.models.problem import BoundaryLaw, IntegralForm, KtauMode, ProblemSpec, SolverConfig
from stefan.models.profile import LinearizedProfile, PhysicalProfile
from stefan.models.trajectory import FreeBoundaryTrajectory
from stefan.services.front_oracle import front_trajectory, make_front, psi_front
from stefan.services.kernel import eval_K
from stefan.services.stefan_ie import (
    convergence_study,
    form_comparison,
    flux_operator,
    initial_flux,
    reconstruct_field,
    rhs_nu,
    solve,
)

LN2 = math.log(2.0)


def quiescent_spec(b_bar=1.0, form=IntegralForm.GREEN, beta2=-1.0):
    """Flat datum with zero slope; endpoint conditions deliberately skipped."""
    profile = LinearizedProfile(
        z_grid=[-5.0, 0.0, b_bar], psi_values=[1.0, 1.0, 1.0], dpsi_values=[0.0, 0.0, 0.0],
        tail_value=1.0, b_bar=b_bar, beta2=beta2,
    )
    return ProblemSpec.model_construct(
        profile=profile, beta1=1.0, beta2=beta2, b=0.5,
        boundary_law=BoundaryLaw.FROZEN_H, ie_form=form, physical_profile=None,
    )


def flat_history(count, dt, zbar):
    times = np.arange(count) * dt
    return FreeBoundaryTrajectory(
        times=times, nu=np.zeros(count), zbar=np.full(count, zbar), s=np.full(count, 0.5),
        picard_iters=np.zeros(count, dtype=np.int64),
    )


class TestSolveFront:
    """Traveling-front regression for solve."""

    def test_flux_matches_oracle(self, front_run, front_config):
        late = front_run.times >= 5 * front_config.dt
        np.testing.assert_allclose(front_run.nu[late], -4.0, rtol=1e-2)

    def test_front_position_matches_oracle(self, front_run):
        np.testing.assert_allclose(front_run.zbar, LN2 - front_run.times, atol=5e-3)
        np.testing.assert_allclose(front_run.s, 1.0 - 2.0 * front_run.times, atol=5e-3)

    def test_initial_node(self, front_run, front_spec):
        assert front_run.zbar[0] == front_spec.b_bar
        assert front_run.s[0] == front_spec.b
        assert front_run.picard_iters[0] == 0
        assert len(front_run) == 301

    def test_s_column_is_the_flux_quadrature(self, front_run, front_spec):
        integral = cumulative_trapezoid(front_run.nu, front_run.times, initial=0.0)
        np.testing.assert_array_equal(front_run.s, front_spec.b - integral / front_spec.beta2)

    def test_frozen_law_ties_zbar_to_s(self, front_run, front_spec):
        beta2 = front_spec.beta2
        np.testing.assert_allclose(
            front_run.zbar - front_spec.b_bar, (1.0 + beta2) / beta2 * (front_run.s - front_spec.b), atol=1e-12
        )

    def test_picard_converges_quickly(self, front_run, front_config):
        assert np.all(front_run.picard_iters[1:] >= 1)
        assert np.all(front_run.picard_iters[1:] < front_config.picard_max)


class TestSolve:
    """Tests for solve."""

    def test_deterministic(self, front_spec):
        cfg = SolverConfig(dt=1e-3, t_end=0.02)
        first, second = solve(front_spec, cfg), solve(front_spec, cfg)
        np.testing.assert_array_equal(first.nu, second.nu)
        np.testing.assert_array_equal(first.zbar, second.zbar)

    def test_quiescent_datum_stays_put(self):
        spec = quiescent_spec()
        traj = solve(spec, SolverConfig(dt=0.01, t_end=0.1))
        np.testing.assert_array_equal(traj.nu, 0.0)
        np.testing.assert_array_equal(traj.zbar, spec.b_bar)
        np.testing.assert_array_equal(traj.s, spec.b)

    def test_non_convergence_carries_partial_trajectory(self, front_spec):
        cfg = SolverConfig(dt=1e-3, t_end=0.01, picard_max=1, picard_tol=1e-14)
        with pytest.raises(NonConvergenceError) as info:
            solve(front_spec, cfg)
        assert info.value.step == 1
        assert len(info.value.partial) == 1

    def test_paper_law_with_frozen_datum_matches_frozen_law(self, front_spec):
        # theta_0 = -2 on the path [0, 1] the front law integrates over
        x = np.linspace(-2.0, 1.0, 3001)
        theta = np.interp(x, [-2.0, -1.5, -1.0, 1.0], [2.0, 2.0, -2.0, -2.0])
        physical = PhysicalProfile(x_grid=x, theta_values=theta, tail_value=2.0, beta2=-2.0)
        paper = ProblemSpec(profile=front_spec.profile, beta1=2.0, beta2=-2.0, b=1.0,
                            boundary_law=BoundaryLaw.PAPER_H, physical_profile=physical)
        cfg = SolverConfig(dt=1e-3, t_end=0.02)
        a, b = solve(paper, cfg), solve(front_spec, cfg)
        np.testing.assert_allclose(a.nu, b.nu, atol=1e-3)
        np.testing.assert_allclose(a.zbar, b.zbar, atol=1e-5)

    def test_paper_law_through_zero_temperature(self, front_spec):
        x = np.linspace(-1.0, 1.0, 201)
        physical = PhysicalProfile(x_grid=x, theta_values=-2.0 * x, tail_value=2.0, beta2=-2.0)
        paper = ProblemSpec(profile=front_spec.profile, beta1=2.0, beta2=-2.0, b=1.0,
                            boundary_law=BoundaryLaw.PAPER_H, physical_profile=physical)
        with pytest.raises(SingularTransformError):
            solve(paper, SolverConfig(dt=1e-3, t_end=0.01))


class TestInitialFlux:
    """Tests for initial_flux."""

    def test_forms(self, front_spec):
        assert initial_flux(front_spec) == pytest.approx(-4.0, rel=1e-9)
        printed = front_spec.model_copy(update={"ie_form": IntegralForm.PRINTED})
        assert initial_flux(printed) == pytest.approx(-2.0 / 0.75, rel=1e-9)


class TestRhsNu:
    """Tests for rhs_nu."""

    def test_fixed_point_on_front(self, front_run, front_spec, front_config):
        n = 150
        value = rhs_nu(front_run.prefix(n), front_run.nu[n], front_run.zbar[n], front_run.times[n],
                       front_spec, front_config)
        assert value == pytest.approx(front_run.nu[n], abs=1e-9)
        assert value == pytest.approx(-4.0, rel=1e-2)

    def test_zero_flux_over_flat_datum(self):
        spec = quiescent_spec(b_bar=20.0)
        cfg = SolverConfig(dt=0.01, t_end=0.1)
        assert rhs_nu(flat_history(5, 0.01, 20.0), 0.0, 20.0, 0.05, spec, cfg) == 0.0

    def test_ktau_modes_agree_on_a_resting_front(self):
        spec = quiescent_spec(form=IntegralForm.PRINTED)
        history = flat_history(500, 1e-3, 1.0)
        t = 0.5
        frozen = rhs_nu(history, 0.0, 1.0, t, spec, SolverConfig(dt=1e-3, t_end=1.0))
        retarded = rhs_nu(history, 0.0, 1.0, t, spec,
                          SolverConfig(dt=1e-3, t_end=1.0, ktau_mode=KtauMode.RETARDED))
        scale = abs(spec.beta2 * eval_K(1.0, t) / spec.prefactor)
        assert abs(frozen - retarded) < 1e-3 * scale

    @pytest.mark.parametrize("mode, rel", [(KtauMode.FROZEN, 1e-12), (KtauMode.RETARDED, 1e-3)])
    def test_ktau_term_is_minus_beta2_K(self, mode, rel):
        # nu = 0 and psi_0' = 0 leave only the jump term and the K_tau history
        spec = quiescent_spec(form=IntegralForm.PRINTED)
        t = 0.5
        cfg = SolverConfig(dt=1e-3, t_end=1.0, ktau_mode=mode)
        value = rhs_nu(flat_history(500, 1e-3, 1.0), 0.0, 1.0, t, spec, cfg)
        ktau = value * spec.prefactor + spec.profile.psi_values[-1] * eval_K(0.0, t)
        assert ktau == pytest.approx(-spec.beta2 * eval_K(1.0, t), rel=rel)
        assert ktau > 0

    def test_rejects_bad_times(self, front_run, front_spec, front_config):
        history = front_run.prefix(3)
        with pytest.raises(DomainError):
            rhs_nu(history.prefix(1), -4.0, LN2, 0.0, front_spec, front_config)
        with pytest.raises(UsageError):
            rhs_nu(history, -4.0, LN2, float(history.times[-1]), front_spec, front_config)

    def test_degenerate_prefactor(self):
        spec = quiescent_spec(form=IntegralForm.PRINTED, beta2=-0.5)
        with pytest.raises(DegeneratePrefactorError):
            rhs_nu(flat_history(2, 0.01, 1.0), 0.0, 1.0, 0.02, spec, SolverConfig(dt=0.01, t_end=0.1))


class TestFluxOperator:
    """Tests for flux_operator."""

    def test_exact_trajectory_is_nearly_fixed(self, front_run, front_spec):
        times = front_run.times[:51]
        image = flux_operator(front_spec, times, front_run.nu[:51])
        np.testing.assert_allclose(image[1:], front_run.nu[1:51], atol=1e-6)
        assert image[0] == initial_flux(front_spec)


class TestReconstructField:
    """Tests for reconstruct_field."""

    def test_matches_front(self, front_run, front_spec):
        front = make_front(2.0, -2.0, LN2)
        t = float(front_run.times[100])
        zbar = float(front_run.zbar[100])
        z = np.linspace(-3.0, zbar, 121)
        snap = reconstruct_field(front_run, front_spec, t, z_grid=z)
        exact = psi_front(front, np.minimum(z, LN2 - t), t)
        assert np.max(np.abs(snap.psi - exact)) < 1e-2

    def test_boundary_residual(self, front_run, front_spec):
        snap = reconstruct_field(front_run, front_spec, float(front_run.times[100]))
        assert snap.boundary_residual <= 1e-2 * abs(front_spec.beta2)
        assert snap.z_grid[-1] == front_run.zbar[100]
        assert snap.z_grid.size == 201

    def test_short_time_limit(self, front_spec):
        traj = FreeBoundaryTrajectory(
            times=[0.0, 1e-6], nu=[-4.0, -4.0], zbar=[LN2, LN2 - 1e-6], s=[1.0, 1.0 - 2e-6],
            picard_iters=[0, 1],
        )
        z = np.linspace(-3.0, 0.5, 71)
        snap = reconstruct_field(traj, front_spec, 1e-6, z_grid=z)
        np.testing.assert_allclose(snap.psi, front_spec.profile.psi_at(z), atol=1e-3)

    def test_printed_representation_at_rest(self):
        # zbar = 1 and nu = 0: int K psi_0 plus the K_xi history, both closed form
        spec = quiescent_spec(form=IntegralForm.PRINTED)
        traj = flat_history(51, 0.01, 1.0)
        t = 0.5
        z = np.linspace(-2.0, 0.9, 30)
        snap = reconstruct_field(traj, spec, t, z_grid=z)
        root = 2.0 * math.sqrt(t)
        exact = 0.5 * erfc((z - 1.0) / root) + 0.5 * spec.beta2 * erfc((1.0 - z) / root)
        np.testing.assert_allclose(snap.psi, exact, atol=1e-5)
        # on the front the K_xi history takes its direct value 0
        assert snap.boundary_residual == pytest.approx(0.5 - spec.beta2, abs=1e-9)

    def test_printed_representation_on_front(self, front_run, front_spec):
        printed = front_spec.model_copy(update={"ie_form": IntegralForm.PRINTED})
        front = make_front(2.0, -2.0, LN2)
        t = float(front_run.times[100])
        zbar = float(front_run.zbar[100])
        z = np.linspace(-3.0, zbar - 0.1, 60)
        snap = reconstruct_field(front_run, printed, t, z_grid=z)
        assert np.max(np.abs(snap.psi - psi_front(front, z, t))) < 1e-2
        # the K_xi history jumps by 1/2 across the front
        full = reconstruct_field(front_run, printed, t)
        assert full.boundary_residual == pytest.approx(0.5 * abs(front_spec.beta2), abs=1e-2)

    def test_physical_pair(self, front_run, front_spec):
        snap = reconstruct_field(front_run, front_spec, float(front_run.times[50]), attach_physical=True)
        assert snap.x[-1] == front_run.s[50]
        np.testing.assert_array_equal(snap.theta, snap.psi)

    def test_rejects_points_beyond_front(self, front_run, front_spec):
        with pytest.raises(DomainError):
            reconstruct_field(front_run, front_spec, float(front_run.times[10]), z_grid=[0.0, 1.0])

    def test_rejects_off_node_time(self, front_run, front_spec):
        with pytest.raises(UsageError):
            reconstruct_field(front_run, front_spec, 0.0105)


class TestConvergenceStudy:
    """Tests for convergence_study."""

    def test_front_errors(self, front_spec):
        table = convergence_study(front_spec, SolverConfig(dt=4e-3, t_end=0.2), [4e-3, 2e-3, 1e-3])
        assert list(table.columns) == ["dt", "error", "zbar_error", "order"]
        assert np.all(table["error"] < 1e-3)
        assert table["error"].iloc[-1] <= table["error"].iloc[0] + 1e-6
        assert math.isnan(table["order"].iloc[0])

    def test_cosine_against_finest(self, cosine_spec):
        table = convergence_study(cosine_spec, SolverConfig(dt=4e-3, t_end=0.1),
                                  [4e-3, 2e-3, 1e-3, 5e-4], reference="finest")
        errors = table["error"].to_numpy()
        assert errors[-1] == 0.0
        assert errors[0] > errors[1] > errors[2]
        assert np.all(table["order"].iloc[1:3] >= 0.9)

    def test_duplicated_dts_give_identical_errors(self, front_spec):
        table = convergence_study(front_spec, SolverConfig(dt=4e-3, t_end=0.04), [4e-3, 4e-3])
        assert table["error"].iloc[0] == table["error"].iloc[1]

    def test_rejects_increasing_dts(self, front_spec):
        with pytest.raises(UsageError):
            convergence_study(front_spec, SolverConfig(dt=1e-3, t_end=0.04), [1e-3, 2e-3])


class TestFormComparison:
    """Tests for form_comparison."""

    def test_printed_form_misses_the_front(self, front_spec):
        cfg = SolverConfig(dt=1e-3, t_end=0.05)
        exact = front_trajectory(make_front(2.0, -2.0, LN2), front_spec.b, cfg.time_grid())
        table = form_comparison(front_spec, cfg, exact).set_index("form")
        assert list(table.index) == ["green", "printed"]
        assert table.loc["green", "status"] == "converged"
        assert table.loc["green", "nodes"] == 51
        assert table.loc["green", "nu_error"] < 1e-2
        assert table.loc["green", "zbar_error"] < 1e-4
        # the printed equation starts at psi_0'(b_bar)/(2 (1 + 1/(2 beta2))) = -8/3, not -4
        assert table.loc["printed", "nu_error"] > 1.0

    def test_degenerate_prefactor_is_reported(self, front_spec):
        spec = quiescent_spec(beta2=-0.5)
        cfg = SolverConfig(dt=0.01, t_end=0.05)
        table = form_comparison(spec, cfg, flat_history(6, 0.01, 1.0)).set_index("form")
        assert table.loc["green", "nu_error"] == 0.0
        assert table.loc["printed", "status"] == "degenerate"
        assert math.isnan(table.loc["printed", "nu_error"])
