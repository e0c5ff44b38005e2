"""
This module builds planar self-shrinkers, the curves with gamma'' = <gamma, gamma'> gamma' - gamma,
from the alpha reduction and searches the one-parameter family alpha(0) in (0, 1),
alpha'(0) = 0 for closed members.

Every trajectory of the shrinker alpha equation with alpha(0) in (0, 1) and alpha'(0) = 0 is
periodic with its minimum at t = 0. Over one period the polar angle advances by delta_theta;
the curve closes after q periods exactly when q * delta_theta is a multiple of 2 pi.

Key Features:
- Solves the alpha equation and reconstructs the curve (`solve_alpha_shrinker`,
  `reconstruct_shrinker`) and evaluates the defining equation (`shrinker_residual`).
- Computes the rotation ratio delta_theta / 2 pi per period, closure reports and scans over
  a grid of initial values (evaluated concurrently, returned in grid order).
- Locates the initial value for a prescribed rational rotation ratio p/q by bracketed
  root finding and builds the corresponding closed curve.
- Measures the reflection symmetry of alpha about its critical times.

Usage:
- `alpha = solve_alpha_shrinker(0.6, 0.0, 20.0)`; `curve = reconstruct_shrinker(alpha)`.
- `reports = closure_scan((0.1, 0.99), n_grid=50, q_max=10)`.
- `closed = closed_curve(2, 3)` for the three-lobed curve winding twice around the origin.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from errors import DomainError, NumericalError, PreconditionError
from polar import (
    PolarShrinkCurve,
    integrate_alpha,
    reconstruct,
    soliton_residual,
    solve_alpha,
    theta_from_alpha,
)
from settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

KIND = "shrinker"
# Limit of the rotation ratio as alpha0 -> 1 (linearisation frequency sqrt 2)
CIRCLE_LIMIT_RATIO = 1.0 / math.sqrt(2.0)
# Rotation ratios of the family alpha'(0) = 0 lie strictly between these
RATIO_RANGE = (0.5, CIRCLE_LIMIT_RATIO)
# Minimum distance of scan bounds from the circle alpha0 = 1
CIRCLE_MARGIN = 1e-4

__all__ = [
    "ClosureReport",
    "ClosedShrinker",
    "RotationBisection",
    "bisect_rotation",
    "closed_curve",
    "closure_report",
    "closure_scan",
    "find_period",
    "reconstruct_shrinker",
    "reflection_defect",
    "rotation_monotone",
    "rotation_ratio",
    "shrinker_residual",
    "solve_alpha_shrinker",
    "theta_from_alpha",
]


def solve_alpha_shrinker(alpha0, dalpha0=0.0, t_span=20.0, settings=DEFAULT_SETTINGS, stop_at_period=False):
    """
    Integrates alpha'' = (alpha')^2 / 2 - 2 alpha + 2 from (alpha0, dalpha0).

    alpha0 = 1, dalpha0 = 0 is the equilibrium (the unit circle) and is returned as a
    constant trajectory without a period.

    Args:
        alpha0 (float): alpha(0) > 0.
        dalpha0 (float): alpha'(0).
        t_span (float): Integration end time, negative for backward integration.
        settings (Settings): Tolerances.
        stop_at_period (bool): Truncate the trajectory at the detected period.

    Returns:
        AlphaSolution: The trajectory; raises PositivityError if alpha reaches zero.
    """
    return solve_alpha(KIND, alpha0, dalpha0, t_span, settings, stop_at_period)


def reconstruct_shrinker(alpha, theta0=0.0, orientation=1, n_samples=512, settings=DEFAULT_SETTINGS):
    """Samples the shrinker sqrt(alpha) (cos theta, sin theta) on a uniform grid of the alpha span."""
    return reconstruct(KIND, alpha, theta0, orientation, n_samples, settings)


def shrinker_residual(curve):
    """Per-sample | gamma'' - (<gamma, gamma'> gamma' - gamma) | over a unit-speed curve."""
    return soliton_residual(curve, KIND)


def find_period(alpha0, dalpha0=0.0, settings=DEFAULT_SETTINGS, with_theta=False, t_guess=20.0, max_span=2560.0):
    """
    Integrates until (alpha, alpha') first returns to its initial value.

    The span is doubled from `t_guess` until a return is found.

    Returns:
        tuple: (IvpSolution truncated at the period, period).
    """
    span = float(t_guess)
    while span <= max_span:
        solution, period, _ = integrate_alpha(
            KIND, alpha0, dalpha0, span, settings, with_theta=with_theta, stop_at_period=True
        )
        if period is not None:
            return solution, period
        span *= 2.0
    raise DomainError(f"No return of (alpha, alpha') to ({alpha0}, {dalpha0}) within t = {max_span}")


def rotation_ratio(alpha0, settings=DEFAULT_SETTINGS):
    """delta_theta / 2 pi over one period of the trajectory alpha(0) = alpha0, alpha'(0) = 0."""
    solution, _ = find_period(alpha0, 0.0, settings, with_theta=True)
    return float(solution.states[-1, 2] / (2.0 * math.pi))


@dataclass(frozen=True)
class ClosureReport:
    """
    Closure diagnostics for one initial value alpha0 (with alpha'(0) = 0).

    `closure_gap` is min over 1 <= q <= q_max of |q delta_theta - 2 pi p|, p the nearest integer;
    `best_p` and `best_q` attain it. `closed` requires the gap and the return of the endpoint
    after q periods to its start, both within tolerance.
    """

    alpha0: float
    period_T: Optional[float] = None
    delta_theta: Optional[float] = None
    rotation_ratio: Optional[float] = None
    closed: bool = False
    closure_gap: Optional[float] = None
    best_p: Optional[int] = None
    best_q: Optional[int] = None
    endpoint_distance: Optional[float] = None
    failed: bool = False
    error: Optional[str] = None


def _best_rational(delta_theta, q_max):
    best = None
    for q in range(1, q_max + 1):
        p = round(q * delta_theta / (2.0 * math.pi))
        gap = abs(q * delta_theta - 2.0 * math.pi * p)
        if best is None or gap < best[0]:
            best = (gap, int(p), q)
    return best


def _endpoint_distance(alpha0, period, q, settings, n_samples=512):
    """Distance between gamma(q T) and gamma(0), relative to the curve diameter."""
    solution, _, _ = integrate_alpha(KIND, alpha0, 0.0, q * period, settings, with_theta=True)
    a, _, theta = solution.states[-1]
    end = math.sqrt(a) * np.array([math.cos(theta), math.sin(theta)])
    start = np.array([math.sqrt(alpha0), 0.0])

    grid = solution(np.linspace(0.0, q * period, n_samples))
    points = np.sqrt(grid[:, 0])[:, None] * np.column_stack([np.cos(grid[:, 2]), np.sin(grid[:, 2])])
    diameter = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    return float(np.linalg.norm(end - start)), diameter


def closure_report(alpha0, q_max=10, settings=DEFAULT_SETTINGS):
    """
    Computes period, rotation ratio and closure gap for alpha(0) = alpha0, alpha'(0) = 0.

    Args:
        alpha0 (float): Initial value in (0, 1]; alpha0 = 1 is the circle, reported closed
                        without a period or rotation ratio.
        q_max (int): Largest number of periods tried.
        settings (Settings): Tolerances; `closure_gap_tol` and `closure_position_tol` decide
                             `closed`.

    Returns:
        ClosureReport: The diagnostics.
    """
    alpha0 = float(alpha0)
    if int(q_max) < 1:
        raise PreconditionError(f"q_max must be at least 1, got {q_max}")
    if alpha0 == 1.0:
        return ClosureReport(alpha0=1.0, closed=True, closure_gap=0.0, best_p=1, best_q=1)

    solution, period = find_period(alpha0, 0.0, settings, with_theta=True)
    delta_theta = float(solution.states[-1, 2])
    gap, p, q = _best_rational(delta_theta, int(q_max))

    closed, distance = False, None
    if gap <= settings.closure_gap_tol:
        distance, diameter = _endpoint_distance(alpha0, period, q, settings)
        closed = distance <= settings.closure_position_tol * diameter
    return ClosureReport(
        alpha0=alpha0,
        period_T=period,
        delta_theta=delta_theta,
        rotation_ratio=delta_theta / (2.0 * math.pi),
        closed=closed,
        closure_gap=gap,
        best_p=p,
        best_q=q,
        endpoint_distance=distance,
    )


def _safe_report(alpha0, q_max, settings):
    try:
        return closure_report(alpha0, q_max, settings)
    except NumericalError as exc:
        logger.warning("Closure report failed at alpha0 = %.12g: %s", alpha0, exc)
        return ClosureReport(alpha0=float(alpha0), failed=True, error=str(exc))


def _check_scan_range(alpha0_range):
    try:
        lo, hi = (float(v) for v in alpha0_range)
    except (TypeError, ValueError):
        raise PreconditionError(f"alpha0 range must be a pair of numbers, got {alpha0_range!r}") from None
    if not 0.0 < lo <= hi < 1.0:
        raise PreconditionError(f"alpha0 range must lie inside (0, 1), got ({lo}, {hi})")
    if 1.0 - hi < CIRCLE_MARGIN:
        raise PreconditionError(f"alpha0 range must stay {CIRCLE_MARGIN} away from 1, got upper bound {hi}")
    return lo, hi


def closure_scan(alpha0_range, n_grid=50, q_max=10, settings=DEFAULT_SETTINGS, workers=None):
    """
    Closure reports on a uniform grid of alpha0 values.

    Grid points are independent and evaluated on a thread pool; the result keeps grid order.
    A numerical failure at one grid point yields a report with `failed` set and the scan
    continues.

    Args:
        alpha0_range (tuple): (lo, hi) inside (0, 1), hi at most 1 - 1e-4.
        n_grid (int): Number of grid points (endpoints included).
        q_max (int): Largest number of periods tried for closure.
        settings (Settings): Tolerances.
        workers (int, optional): Thread pool size; 1 evaluates sequentially.

    Returns:
        list[ClosureReport]: One report per grid point.
    """
    lo, hi = _check_scan_range(alpha0_range)
    if int(n_grid) < 1:
        raise PreconditionError(f"n_grid must be at least 1, got {n_grid}")
    grid = np.linspace(lo, hi, int(n_grid))
    logger.info("Closure scan over %d points in [%g, %g], q_max = %d", grid.size, lo, hi, q_max)

    if workers == 1:
        reports = [_safe_report(a, q_max, settings) for a in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda a: _safe_report(a, q_max, settings), grid))

    failures = sum(r.failed for r in reports)
    if failures:
        logger.warning("%d of %d grid points failed", failures, len(reports))
    return reports


def rotation_monotone(reports):
    """True when the rotation ratios of the successful reports are strictly monotone in alpha0."""
    ratios = np.array([r.rotation_ratio for r in reports if not r.failed and r.rotation_ratio is not None])
    if ratios.size < 2:
        return True
    steps = np.diff(ratios)
    return bool(np.all(steps > 0.0) or np.all(steps < 0.0))


@dataclass(frozen=True)
class RotationBisection:
    """Initial value whose rotation ratio hits a target, with the bracket it was found in."""

    target: float
    alpha0: float
    rotation_ratio: float
    bracket: tuple
    monotone: bool
    converged: bool

    def raise_for_status(self):
        """Raises NumericalError when the ratio missed the target by more than `bisection_tol`."""
        if not self.converged:
            raise NumericalError(
                f"Rotation ratio {self.rotation_ratio!r} at alpha0 = {self.alpha0!r} misses target {self.target!r}"
            )
        return self


def bisect_rotation(target, lo=0.02, hi=1.0 - CIRCLE_MARGIN, settings=DEFAULT_SETTINGS, n_grid=17):
    """
    Finds alpha0 in [lo, hi] with rotation_ratio(alpha0) = target.

    The ratio is sampled on `n_grid` points first. When it is monotone there the whole
    interval is the bracket; otherwise the first grid subinterval with a sign change is used.
    The result is flagged `converged=False` when the located ratio misses the target by more
    than `settings.bisection_tol`.

    Raises:
        PreconditionError: The target is not bracketed by any grid subinterval.
    """
    lo, hi = _check_scan_range((lo, hi))
    target = float(target)
    grid = np.linspace(lo, hi, int(n_grid))
    values = np.array([rotation_ratio(a, settings) for a in grid]) - target
    steps = np.diff(values)
    monotone = bool(np.all(steps > 0.0) or np.all(steps < 0.0))
    if monotone and values[0] * values[-1] <= 0.0:
        bracket = (lo, hi)
    else:
        changes = np.nonzero(values[:-1] * values[1:] <= 0.0)[0]
        if changes.size == 0:
            raise PreconditionError(
                f"Rotation ratio {target} is not attained on [{lo}, {hi}] "
                f"(range {values.min() + target:.6f} .. {values.max() + target:.6f})"
            )
        k = int(changes[0])
        bracket = (float(grid[k]), float(grid[k + 1]))
        if not monotone:
            logger.info("Rotation ratio not monotone on [%g, %g]; using bracket %s", lo, hi, bracket)

    f = lambda a: rotation_ratio(a, settings) - target  # noqa: E731
    alpha0 = brentq(f, *bracket, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    ratio = rotation_ratio(alpha0, settings)
    converged = abs(ratio - target) <= settings.bisection_tol
    if not converged:
        logger.warning("Rotation ratio %.15g misses target %.15g by %.3g", ratio, target, abs(ratio - target))
    return RotationBisection(target, float(alpha0), ratio, bracket, monotone, converged)


@dataclass(frozen=True, eq=False)
class ClosedShrinker:
    """A shrinker closing after q periods with total turning 2 pi p."""

    p: int
    q: int
    alpha0: float
    period: float
    curve: PolarShrinkCurve = field(repr=False)


def closed_curve(p, q, alpha0=None, n_samples=1025, settings=DEFAULT_SETTINGS):
    """
    Builds the closed shrinker with rotation ratio p/q, sampled over q full periods.

    Args:
        p (int): Number of turns around the origin.
        q (int): Number of periods (lobes).
        alpha0 (float, optional): Initial value; located with `bisect_rotation` when omitted.
        n_samples (int): Samples over [0, q T]; the last one repeats the first point.
        settings (Settings): Tolerances.

    Returns:
        ClosedShrinker: The curve and its parameters.
    """
    p, q = int(p), int(q)
    if p < 1 or q < 1 or math.gcd(p, q) != 1:
        raise PreconditionError(f"p/q must be a reduced fraction of positive integers, got {p}/{q}")
    if not RATIO_RANGE[0] < p / q < RATIO_RANGE[1]:
        raise PreconditionError(f"Closed shrinkers have rotation ratios in {RATIO_RANGE}, got {p}/{q}")
    if alpha0 is None:
        alpha0 = bisect_rotation(p / q, settings=settings).raise_for_status().alpha0
    _, period = find_period(alpha0, 0.0, settings)
    alpha = solve_alpha_shrinker(alpha0, 0.0, q * period, settings)
    curve = reconstruct_shrinker(alpha, n_samples=n_samples, settings=settings)
    logger.debug("Closed shrinker %d/%d at alpha0 = %.15g, period %.15g", p, q, alpha0, period)
    return ClosedShrinker(p, q, float(alpha0), period, curve)


def reflection_defect(alpha, t_critical=None, horizon=None, n_points=401):
    """
    max over tau of |alpha(t_c + tau) - alpha(t_c - tau)| about a critical time t_c.

    Args:
        alpha (AlphaSolution): The trajectory.
        t_critical (float, optional): Critical time; defaults to the first detected one
                                      (t = 0 when alpha'(0) = 0) leaving room on both sides.
        horizon (float, optional): Largest tau; defaults to the largest that stays in the span.
    """
    lo, hi = alpha.span
    if t_critical is None:
        candidates = ([0.0] if alpha.dalpha0 == 0.0 else []) + [float(t) for t in alpha.critical_times]
        candidates = [t for t in candidates if min(t - lo, hi - t) > 0.0]
        if not candidates:
            raise PreconditionError("The trajectory has no interior critical time")
        t_critical = candidates[0]
    reach = min(t_critical - lo, hi - t_critical)
    horizon = reach if horizon is None else min(float(horizon), reach)
    if horizon <= 0.0:
        raise PreconditionError(f"No symmetric window around t = {t_critical} inside [{lo}, {hi}]")
    tau = np.linspace(0.0, horizon, int(n_points))
    return float(np.max(np.abs(alpha.alpha(t_critical + tau) - alpha.alpha(t_critical - tau))))
