import numpy as np
import pytest

from errors import PositivityError, ReconstructionDomainError
from expander import (
    LineSoliton,
    asymptotic_tangent_drift,
    expander_curve,
    expander_residual,
    growth_factor,
    reconstruct_expander,
    solve_alpha_expander,
)
from geometry import arc_length_defect
from ode_engine import IvpProblem, integrate_fixed
from polar import (
    alpha_rhs,
    polar_component_residuals,
    theta_by_quadrature,
    theta_from_alpha,
    unit_speed_theta_residual,
)


@pytest.fixture(scope="module")
def expander_05():
    return reconstruct_expander(solve_alpha_expander(0.5, 0.0, 3.0), n_samples=2001)


def test_alpha_grows_from_minimum():
    alpha = solve_alpha_expander(1.0, 0.0, 3.0)
    t = np.linspace(0.0, 3.0, 301)
    values = alpha.alpha(t)
    assert np.all(np.diff(values) > 0.0)
    assert np.all(values[1:] > 1.0)
    assert alpha.period is None
    assert alpha.critical_times.size == 0
    assert alpha.ddalpha(0.0) == pytest.approx(4.0)


def test_positivity_for_random_minima(rng):
    for alpha0 in rng.uniform(0.05, 5.0, size=20):
        for t_span in (10.0, -10.0):
            alpha = solve_alpha_expander(alpha0, 0.0, t_span)
            assert alpha.min_alpha() == pytest.approx(alpha0, abs=1e-6)


def test_alpha_against_fixed_step_oracle():
    alpha = solve_alpha_expander(0.5, 0.0, 5.0)
    oracle = integrate_fixed(IvpProblem(alpha_rhs("expander"), 0.0, [0.5, 0.0], 5.0), 20_000)
    assert alpha.alpha(5.0) == pytest.approx(oracle.states[-1, 0], rel=1e-8)
    assert solve_alpha_expander(0.5, 0.0, 1.0).first_integral_drift() <= 1e-8


def test_positivity_error_for_inward_start():
    with pytest.raises(PositivityError) as info:
        solve_alpha_expander(0.5, -3.0, 2.0)
    assert info.value.t is not None and 0.0 < info.value.t < 1.0


def test_reconstructed_expander(expander_05):
    assert expander_residual(expander_05).max_residual <= 1e-7
    assert arc_length_defect(expander_05.samples) <= 1e-7
    assert unit_speed_theta_residual(expander_05) <= 1e-8
    radial, angular = polar_component_residuals(expander_05)
    assert max(radial.max_residual, angular.max_residual) <= 1e-7


def test_orientation_gives_mirror_curve():
    alpha = solve_alpha_expander(0.5, 0.0, 3.0)
    plus = reconstruct_expander(alpha, orientation=1, n_samples=101).samples.positions
    minus = reconstruct_expander(alpha, orientation=-1, n_samples=101).samples.positions
    np.testing.assert_allclose(minus[:, 0], plus[:, 0], atol=1e-9)
    np.testing.assert_allclose(minus[:, 1], -plus[:, 1], atol=1e-9)


def test_steep_start_leaves_reconstruction_domain():
    alpha = solve_alpha_expander(1.0, 3.0, 1.0)
    with pytest.raises(ReconstructionDomainError):
        reconstruct_expander(alpha)


def test_circle_is_not_an_expander(unit_circle):
    assert expander_residual(unit_circle).max_residual == pytest.approx(2.0, abs=1e-9)


def test_line_is_an_expander():
    line = LineSoliton([1.0, -1.0]).sample(np.linspace(-3.0, 3.0, 13))
    assert expander_residual(line).max_residual <= 1e-14


def test_two_sided_expander_straightens_out():
    curve = expander_curve(0.5, n_samples=1025)
    assert curve.params[0] == -5.0 and curve.params[-1] == 5.0
    assert expander_residual(curve).max_residual <= 1e-7
    start, end = asymptotic_tangent_drift(curve)
    assert start < 1e-2 and end < 1e-2


def test_growth_factor():
    alpha = solve_alpha_expander(0.5, 0.0, 5.0)
    assert growth_factor(alpha) > 5.0


def test_alpha_at_span_end_regression():
    # independent classical RK4 with 10^6 steps
    assert solve_alpha_expander(0.5, 0.0, 5.0).alpha(5.0) == pytest.approx(28.8715963558769, rel=1e-8)


@pytest.mark.parametrize(
    "alpha0, span, bound",
    [(0.5, 4.0, 1e-7), (0.5, 5.0, 1e-7), (2.0, 3.0, 1e-7), (5.0, 3.0, 1e-6), (5.0, 5.0, 1e-6)],
)
def test_long_span_reconstruction(alpha0, span, bound):
    alpha = solve_alpha_expander(alpha0, 0.0, span)
    curve = reconstruct_expander(alpha, n_samples=2001)
    assert expander_residual(curve).max_residual <= bound
    assert arc_length_defect(curve.samples) <= 1e-7
    assert unit_speed_theta_residual(curve) <= 1e-7


def test_angle_far_out_matches_quadrature():
    alpha = solve_alpha_expander(0.5, 0.0, 5.0)
    angle = theta_from_alpha(alpha)
    assert angle(5.0) == pytest.approx(theta_by_quadrature(alpha, 5.0), abs=1e-8)
    # the angle keeps turning, by less and less, all the way out
    assert 0.0 < angle(5.0) - angle(4.0) < angle(2.0) - angle(1.0)
