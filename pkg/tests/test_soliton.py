import math

import numpy as np
import pytest

from conftest import circle_sample
from errors import DomainError, PreconditionError
from geometry import LineSoliton, arc_length_defect, fit_plane
from shrinker import find_period, reconstruct_shrinker, solve_alpha_shrinker
from soliton import (
    SolitonSpec,
    integrate_soliton,
    plane_confinement,
    soliton_from_polar,
    spherical_residuals,
    triple_derivative_check,
    verify_planarity,
)

TILT = 0.3


@pytest.fixture(scope="module")
def tilted_shrinker():
    spec = SolitonSpec("shrinker", [math.sqrt(0.6), 0.0, 0.0], [0.0, math.cos(TILT), math.sin(TILT)], 20.0)
    return spec, integrate_soliton(spec, n_samples=4001)


def random_spec(rng, kind, t_span):
    p0 = rng.normal(size=3)
    v0 = rng.normal(size=3)
    v0 /= np.linalg.norm(v0)
    return SolitonSpec(kind, p0, v0, t_span)


def test_spec_validation():
    with pytest.raises(PreconditionError, match="unit length"):
        SolitonSpec("shrinker", [1.0, 0.0], [0.0, 2.0], 1.0)
    with pytest.raises(PreconditionError):
        SolitonSpec("translator", [1.0, 0.0], [0.0, 1.0], 1.0)
    with pytest.raises(PreconditionError):
        SolitonSpec("shrinker", [1.0, 0.0], [0.0, 1.0], 0.0)
    with pytest.raises(PreconditionError):
        SolitonSpec("shrinker", [1.0, 0.0, 0.0], [0.0, 1.0], 1.0)


def test_planar_circle():
    curve = integrate_soliton(SolitonSpec("shrinker", [1.0, 0.0], [0.0, 1.0], 2.0 * math.pi))
    assert np.linalg.norm(curve.positions[-1] - curve.positions[0]) <= 1e-8
    np.testing.assert_allclose(np.linalg.norm(curve.positions, axis=1), 1.0, atol=1e-9)


def test_circle_embedded_in_space():
    curve = integrate_soliton(SolitonSpec("shrinker", [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0 * math.pi))
    np.testing.assert_array_equal(curve.positions[:, 2], 0.0)
    assert curve.dimension == 3


def test_backward_span_returns_increasing_params():
    curve = integrate_soliton(SolitonSpec("expander", [1.0, 0.5], [0.0, 1.0], -2.0), n_samples=101)
    assert curve.params[0] == -2.0 and curve.params[-1] == 0.0
    np.testing.assert_allclose(curve.positions[-1], [1.0, 0.5])


def test_tilted_shrinker_is_planar(tilted_shrinker):
    spec, curve = tilted_shrinker
    assert fit_plane(curve).max_residual <= 1e-8
    assert plane_confinement(curve, spec.p0, spec.v0) <= 1e-7
    assert arc_length_defect(curve) <= 1e-8


def test_planarity_on_circle():
    circle = circle_sample(n=2001)
    report = verify_planarity(circle, "shrinker")
    assert report.v_drift <= 1e-9
    assert not report.degenerate
    first = report.rs_solutions[0]
    np.testing.assert_allclose(first[:, 0], np.cos(circle.params), atol=1e-8)
    np.testing.assert_allclose(first[:, 1], -np.sin(circle.params), atol=1e-8)


def test_planarity_of_generated_curves(tilted_shrinker):
    _, curve = tilted_shrinker
    report = verify_planarity(curve, "shrinker")
    assert report.v_drift <= 1e-7
    assert report.combined_drift(0.3, -1.7) <= 1e-7
    assert report.spanned_by_initial <= 1e-7


def test_planarity_of_tilted_expander():
    expander = integrate_soliton(SolitonSpec("expander", [0.4, -0.2, 0.7], [0.0, 0.6, 0.8], 3.0))
    assert verify_planarity(expander, "expander").v_drift <= 1e-7


def test_planarity_of_coarsely_sampled_circle():
    # 257 samples: the interpolated a and b must not show up in the drift
    report = verify_planarity(circle_sample(n=257), "shrinker")
    assert report.v_drift <= 1e-9
    assert not report.degenerate


def test_planarity_detects_wrong_kind(tilted_shrinker):
    _, curve = tilted_shrinker
    assert verify_planarity(curve, "expander").v_drift > 1e-3


def test_planarity_of_line():
    line = LineSoliton([1.0, 1.0, 0.0]).sample(np.linspace(-2.0, 2.0, 101))
    report = verify_planarity(line, "shrinker")
    assert report.degenerate
    assert report.plane.max_residual <= 1e-12


@pytest.mark.parametrize("kind, t_span", [("shrinker", 10.0), ("expander", 3.0)])
def test_random_specs_lie_in_initial_plane(rng, kind, t_span):
    for _ in range(3):
        spec = random_spec(rng, kind, t_span)
        curve = integrate_soliton(spec)
        assert fit_plane(curve).max_residual <= 1e-7 * (1.0 + curve.diameter())
        assert plane_confinement(curve, spec.p0, spec.v0) <= 1e-7
        assert verify_planarity(curve, kind).v_drift <= 1e-7


@pytest.mark.slow
@pytest.mark.parametrize("kind, t_span", [("shrinker", 10.0), ("expander", 3.0)])
def test_twenty_random_specs_lie_in_initial_plane(rng, kind, t_span):
    for _ in range(20):
        spec = random_spec(rng, kind, t_span)
        curve = integrate_soliton(spec)
        assert fit_plane(curve).max_residual <= 1e-7 * (1.0 + curve.diameter())
        assert plane_confinement(curve, spec.p0, spec.v0) <= 1e-7
        assert verify_planarity(curve, kind).v_drift <= 1e-7


def test_direct_integration_matches_polar_reconstruction():
    _, period = find_period(0.6)
    polar = reconstruct_shrinker(solve_alpha_shrinker(0.6, 0.0, period), n_samples=1001).samples
    direct = integrate_soliton(SolitonSpec("shrinker", [math.sqrt(0.6), 0.0], [0.0, 1.0], period), n_samples=1001)
    np.testing.assert_allclose(direct.params, polar.params, rtol=1e-12)
    assert np.max(np.linalg.norm(direct.positions - polar.positions, axis=1)) <= 1e-6


def test_triple_derivative_identity():
    assert triple_derivative_check(circle_sample(n=2001), "shrinker").max_residual <= 1e-6

    planar = reconstruct_shrinker(solve_alpha_shrinker(0.6, 0.0, 10.0), n_samples=4001)
    lifted = soliton_from_polar(planar, dimension=3)
    assert triple_derivative_check(lifted, "shrinker").max_residual <= 1e-5

    line = LineSoliton([0.0, 1.0]).sample(np.linspace(0.0, 1.0, 11))
    assert triple_derivative_check(line, "expander").max_residual == 0.0

    with pytest.raises(PreconditionError):
        triple_derivative_check(circle_sample(n=4), "shrinker")


def test_triple_derivative_for_expanders():
    expander = integrate_soliton(SolitonSpec("expander", [0.5, 0.2, 0.0], [0.0, 0.6, 0.8], 2.0), n_samples=4001)
    assert triple_derivative_check(expander, "expander").max_residual <= 1e-5


def test_soliton_from_polar_frame_checks(unit_circle):
    frame = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    lifted = soliton_from_polar(unit_circle, 3, frame)
    np.testing.assert_array_equal(lifted.positions[:, 1], 0.0)
    with pytest.raises(PreconditionError):
        soliton_from_polar(unit_circle, 3, 2.0 * frame)
    with pytest.raises(PreconditionError):
        soliton_from_polar(lifted, 3)
    default = soliton_from_polar(unit_circle, 4)
    np.testing.assert_array_equal(default.positions[:, :2], unit_circle.positions)
    np.testing.assert_array_equal(default.d2[:, 2:], 0.0)
    with pytest.raises(PreconditionError):
        soliton_from_polar(unit_circle, 1)


def test_spherical_residuals_on_equator(unit_circle):
    res = spherical_residuals(unit_circle.embed(3))
    for value in (res.res_radial, res.res_theta, res.res_phi, res.res_speed):
        assert value <= 1e-12
    assert res.skipped == 0


def test_spherical_residuals_on_tilted_shrinker(tilted_shrinker):
    _, curve = tilted_shrinker
    res = spherical_residuals(curve)
    assert max(res.res_radial, res.res_theta, res.res_phi, res.res_speed) <= 1e-6
    assert res.evaluated + res.skipped == len(curve)


def test_spherical_residuals_on_expander():
    curve = integrate_soliton(SolitonSpec("expander", [0.5, 0.2, 0.3], [0.0, 0.6, 0.8], 2.0))
    res = spherical_residuals(curve, "expander")
    assert max(res.res_radial, res.res_theta, res.res_phi, res.res_speed) <= 1e-6


def test_spherical_residuals_negative_control(helix):
    assert spherical_residuals(helix).res_radial > 1e-2


def test_spherical_residuals_singular_input(unit_circle):
    axis = LineSoliton([0.0, 0.0, 1.0]).sample(np.linspace(1.0, 2.0, 11))
    with pytest.raises(DomainError):
        spherical_residuals(axis)
    with pytest.raises(PreconditionError):
        spherical_residuals(unit_circle)
