import math

import numpy as np
import pytest

from conftest import circle_sample
import shrinker
from errors import NumericalError, PreconditionError
from geometry import LineSoliton, arc_length_defect
from shrinker import (
    CIRCLE_LIMIT_RATIO,
    RATIO_RANGE,
    ClosureReport,
    bisect_rotation,
    closed_curve,
    closure_report,
    closure_scan,
    find_period,
    reconstruct_shrinker,
    reflection_defect,
    rotation_monotone,
    rotation_ratio,
    shrinker_residual,
    solve_alpha_shrinker,
)


@pytest.fixture(scope="module")
def shrinker_06():
    return reconstruct_shrinker(solve_alpha_shrinker(0.6, 0.0, 20.0), n_samples=2001)


def test_circle_is_the_equilibrium():
    alpha = solve_alpha_shrinker(1.0, 0.0, 2.0 * math.pi)
    t = np.linspace(0.0, 2.0 * math.pi, 101)
    np.testing.assert_array_equal(alpha.alpha(t), 1.0)
    assert alpha.period is None

    curve = reconstruct_shrinker(alpha, n_samples=257)
    samples = curve.samples
    expected = np.column_stack([np.cos(samples.params), np.sin(samples.params)])
    np.testing.assert_allclose(samples.positions, expected, atol=1e-9)
    np.testing.assert_allclose(samples.d2, -samples.positions, atol=1e-12)
    assert shrinker_residual(curve).max_residual <= 1e-9


def test_residual_cases(unit_circle):
    assert shrinker_residual(unit_circle).max_residual <= 1e-15
    line = LineSoliton([0.6, 0.8]).sample(np.linspace(-2.0, 2.0, 9))
    assert shrinker_residual(line).max_residual == 0.0
    # radius 2: gamma'' = -gamma / 4 against -gamma
    assert shrinker_residual(circle_sample(radius=2.0)).max_residual == pytest.approx(1.5, abs=1e-12)


def test_residual_requires_unit_speed(helix):
    with pytest.raises(PreconditionError, match="arc length"):
        shrinker_residual(helix)


def test_reconstructed_shrinker_solves_the_equation(shrinker_06):
    assert shrinker_residual(shrinker_06).max_residual <= 1e-7
    assert arc_length_defect(shrinker_06.samples) <= 1e-7
    radius = shrinker_06.radius()
    assert radius.min() == pytest.approx(math.sqrt(0.6), abs=1e-7)
    assert radius.max() > 1.0


def test_positivity_for_random_minima(rng):
    for alpha0 in rng.uniform(0.05, 0.95, size=5):
        _, period = find_period(alpha0)
        alpha = solve_alpha_shrinker(alpha0, 0.0, 5.0 * period)
        assert alpha.min_alpha() == pytest.approx(alpha0, abs=1e-6)


@pytest.mark.slow
def test_positivity_for_many_random_minima(rng):
    values = np.append(rng.uniform(0.05, 0.95, size=49), 0.6)
    for alpha0 in values:
        _, period = find_period(alpha0)
        alpha = solve_alpha_shrinker(alpha0, 0.0, 5.0 * period)
        assert alpha.min_alpha() == pytest.approx(alpha0, abs=1e-6)


def test_find_period_matches_trajectory():
    solution, period = find_period(0.6)
    alpha = solve_alpha_shrinker(0.6, 0.0, 20.0)
    assert period == pytest.approx(alpha.period, rel=1e-10)
    assert solution.t_final == pytest.approx(period)


def test_reflection_about_critical_times():
    alpha = solve_alpha_shrinker(0.6, 0.0, 20.0)
    assert reflection_defect(alpha) <= 1e-8
    assert reflection_defect(alpha, t_critical=float(alpha.critical_times[2])) <= 1e-8
    with pytest.raises(PreconditionError):
        reflection_defect(alpha, t_critical=0.0)


def test_rotation_ratio_of_family_member():
    ratio = rotation_ratio(0.6)
    assert RATIO_RANGE[0] < ratio < RATIO_RANGE[1]


def test_rotation_ratio_near_circle():
    assert rotation_ratio(1.0 - 1e-6) == pytest.approx(CIRCLE_LIMIT_RATIO, abs=1e-4)


def test_closure_report_circle():
    report = closure_report(1.0)
    assert report.closed
    assert report.rotation_ratio is None and report.period_T is None
    assert report.closure_gap == 0.0


def test_closure_report_fields():
    report = closure_report(0.6, q_max=10)
    assert not report.failed
    assert report.rotation_ratio == pytest.approx(report.delta_theta / (2.0 * math.pi))
    assert 1 <= report.best_q <= 10
    assert report.closure_gap == pytest.approx(
        abs(report.best_q * report.delta_theta - 2.0 * math.pi * report.best_p)
    )
    with pytest.raises(PreconditionError):
        closure_report(0.6, q_max=0)


def test_closure_scan_keeps_grid_order():
    threaded = closure_scan((0.3, 0.9), n_grid=4, q_max=5, workers=4)
    sequential = closure_scan((0.3, 0.9), n_grid=4, q_max=5, workers=1)
    assert [r.alpha0 for r in threaded] == pytest.approx([0.3, 0.5, 0.7, 0.9])
    assert threaded == sequential
    assert not any(r.failed for r in threaded)


@pytest.mark.parametrize("bounds", [(0.0, 0.5), (0.5, 1.0), (0.8, 0.2), (0.2, 1.0 - 1e-5)])
def test_closure_scan_rejects_bad_ranges(bounds):
    with pytest.raises(PreconditionError):
        closure_scan(bounds, n_grid=3)


def test_rotation_monotone_helper():
    up = [ClosureReport(alpha0=a, rotation_ratio=r) for a, r in ((0.1, 0.55), (0.2, 0.6), (0.3, 0.65))]
    assert rotation_monotone(up)
    bumpy = up + [ClosureReport(alpha0=0.4, rotation_ratio=0.62)]
    assert not rotation_monotone(bumpy)
    assert rotation_monotone(up + [ClosureReport(alpha0=0.5, failed=True)])


def test_closed_curve_validation():
    with pytest.raises(PreconditionError):
        closed_curve(2, 4)
    with pytest.raises(PreconditionError):
        closed_curve(3, 4)


@pytest.mark.slow
def test_full_closure_scan():
    reports = closure_scan((0.1, 0.99), n_grid=50, q_max=10)
    assert len(reports) == 50
    assert not any(r.failed for r in reports)
    assert rotation_monotone(reports)
    ratios = [r.rotation_ratio for r in reports]
    assert all(RATIO_RANGE[0] < r < RATIO_RANGE[1] for r in ratios)


@pytest.mark.slow
def test_bisection_hits_rational_ratio_and_closes():
    result = bisect_rotation(2.0 / 3.0)
    assert result.converged
    assert result.rotation_ratio == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert result.bracket[0] <= result.alpha0 <= result.bracket[1]

    report = closure_report(result.alpha0)
    assert report.closed
    assert (report.best_p, report.best_q) == (2, 3)

    closed = closed_curve(2, 3, alpha0=result.alpha0)
    samples = closed.curve.samples
    gap = np.linalg.norm(samples.positions[-1] - samples.positions[0])
    assert gap <= 1e-5 * samples.diameter()
    assert shrinker_residual(closed.curve).max_residual <= 1e-7


def test_period_and_rotation_regression():
    # independent classical RK4 with 10^6 steps
    _, period = find_period(0.6)
    assert period == pytest.approx(4.48400707338, rel=1e-8)
    assert rotation_ratio(0.6) == pytest.approx(0.7038457068721, abs=1e-8)


def test_bisection_flags_missed_target(monkeypatch):
    # a jump across the target: brentq lands on the jump, never on the target
    monkeypatch.setattr(shrinker, "rotation_ratio", lambda a, settings: 0.6 if a < 0.5 else 0.8)
    result = bisect_rotation(0.7, lo=0.1, hi=0.9)
    assert not result.converged
    assert result.bracket[0] <= result.alpha0 <= result.bracket[1]
    with pytest.raises(NumericalError, match="misses target"):
        result.raise_for_status()


def test_bisection_converges_on_smooth_ratio(monkeypatch):
    monkeypatch.setattr(shrinker, "rotation_ratio", lambda a, settings: 0.5 + 0.25 * a)
    result = bisect_rotation(0.6, lo=0.1, hi=0.9)
    assert result.converged and result.monotone
    assert result.alpha0 == pytest.approx(0.4, abs=1e-12)
    assert result.raise_for_status() is result
