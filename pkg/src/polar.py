"""
This module reduces planar self-similar curves to the scalar ODE for the squared distance
alpha = <gamma, gamma> and rebuilds the curve from it in polar coordinates. Shrinkers and
expanders share the machinery; they differ only in the sign of the alpha equation.

    shrinker:  alpha'' - (alpha')^2 / 2 + 2 alpha = 2
    expander:  alpha'' + (alpha')^2 / 2 - 2 alpha = 2

With u = sqrt(alpha) the unit-speed condition fixes theta'^2 = (1 - u'^2) / u^2, i.e.
theta' = orientation * sqrt(4 alpha - alpha'^2) / (2 alpha), which is integrated jointly
with alpha. Along a trajectory 4 alpha - alpha'^2 is taken from the conserved quantity,
(4 alpha0 - dalpha0^2) exp(sign (alpha - alpha0)); the direct difference cancels to noise
once an expander has grown.

Key Features:
- `solve_alpha` integrates the alpha equation with positivity enforcement, detection of
  critical points and of the first return to the initial state (the period).
- `theta_from_alpha` integrates theta jointly with alpha; `theta_by_quadrature` is an
  independent quadrature oracle.
- `reconstruct` samples gamma, gamma', gamma'' on a uniform grid.
- Diagnostics: conserved quantity of the alpha equation, the u-form of the equation, the
  two polar component equations and the unit-speed relation for theta.

Usage:
- `alpha = solve_alpha("shrinker", 0.6, 0.0, 20.0)` followed by
  `curve = reconstruct("shrinker", alpha, theta0=0.0, orientation=1, n_samples=512)`.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from errors import PositivityError, PreconditionError, ReconstructionDomainError
from geometry import CurveSample, ResidualReport, arc_length_defect, kind_sign, soliton_acceleration
from ode_engine import EventSpec, IvpProblem, IvpSolution, first_event, integrate
from settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

# Event slots used by solve_alpha
_POSITIVITY, _RETURN, _CRITICAL = 0, 1, 2


def alpha_rhs(kind):
    """Returns the first-order right-hand side (alpha, alpha')' for the given kind."""
    sign = kind_sign(kind)

    def rhs(t, y):
        a, da = y[0], y[1]
        return np.array([da, sign * (0.5 * da * da - 2.0 * a) + 2.0])

    return rhs


def alpha_second_derivative(kind, a, da):
    """alpha'' from the alpha equation, element-wise."""
    return kind_sign(kind) * (0.5 * np.square(da) - 2.0 * np.asarray(a)) + 2.0


def theta_rate(a, da, orientation, settings=DEFAULT_SETTINGS, t=None, q=None):
    """
    theta' = orientation * sqrt(4 alpha - alpha'^2) / (2 alpha), element-wise.

    Values of 1 - u'^2 = (4 alpha - alpha'^2) / (4 alpha) down to -reconstruction_clamp are
    clamped to zero; anything below raises ReconstructionDomainError.

    Args:
        q (array_like, optional): 4 alpha - alpha'^2 when already known, e.g. from
                                  `conserved_discriminant`; computed from a and da otherwise.
    """
    a = np.asarray(a, dtype=float)
    da = np.asarray(da, dtype=float)
    if np.any(a <= 0.0):
        where = np.argmin(a) if a.ndim else None
        raise PositivityError(
            f"alpha is not positive (min {np.min(a)!r})",
            t=None if t is None else np.atleast_1d(t)[where or 0],
            alpha=float(np.min(a)),
        )
    q = 4.0 * a - np.square(da) if q is None else np.asarray(q, dtype=float)
    slack = q / (4.0 * a)
    if np.any(slack < -settings.reconstruction_clamp):
        index = int(np.argmin(slack)) if slack.ndim else 0
        raise ReconstructionDomainError(
            f"1 - u'^2 = {float(np.min(slack))!r} < 0: theta' is undefined",
            t=None if t is None else float(np.atleast_1d(t)[index]),
            value=float(np.min(slack)),
        )
    return orientation * np.sqrt(np.clip(q, 0.0, None)) / (2.0 * a)


def alpha_first_integral(a, da, kind):
    """
    Conserved quantity of the alpha equation: (4 alpha - alpha'^2) * exp(-sign * alpha).

    Its positivity keeps alpha > 0 and 1 - u'^2 > 0 along the whole trajectory.
    """
    return (4.0 * np.asarray(a) - np.square(da)) * np.exp(-kind_sign(kind) * np.asarray(a))


def conserved_discriminant(kind, a, alpha0, dalpha0):
    """4 alpha - alpha'^2 along the trajectory from (alpha0, dalpha0), via the first integral."""
    q0 = 4.0 * alpha0 - dalpha0 * dalpha0
    return q0 * np.exp(kind_sign(kind) * (np.asarray(a, dtype=float) - alpha0))


@dataclass(frozen=True, eq=False)
class AlphaSolution:
    """
    A trajectory of the alpha equation with dense output.

    Attributes:
        kind (str): "shrinker" or "expander".
        alpha0 (float): alpha at t = 0.
        dalpha0 (float): alpha' at t = 0.
        solution (IvpSolution): Dense solution for the state (alpha, alpha').
        period (float or None): First return time to (alpha0, dalpha0), when detected.
        critical_times (numpy.ndarray): Times where alpha' changes sign.
    """

    kind: str
    alpha0: float
    dalpha0: float
    solution: IvpSolution = field(repr=False)
    period: Optional[float] = None
    critical_times: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def span(self):
        return self.solution.span

    @property
    def t_final(self):
        return self.solution.t_final

    def alpha(self, t):
        return self.solution(t)[..., 0]

    def dalpha(self, t):
        return self.solution(t)[..., 1]

    def ddalpha(self, t):
        state = self.solution(t)
        return alpha_second_derivative(self.kind, state[..., 0], state[..., 1])

    def min_alpha(self, n_dense=2000):
        """Smallest alpha over the nodes, the critical points and a dense grid."""
        lo, hi = self.span
        candidates = [self.solution.states[:, 0].min(), self.alpha(np.linspace(lo, hi, n_dense)).min()]
        if self.critical_times.size:
            candidates.append(self.alpha(self.critical_times).min())
        return float(min(candidates))

    def first_integral_drift(self):
        """Largest relative change of the conserved quantity over the stored nodes."""
        values = alpha_first_integral(self.solution.states[:, 0], self.solution.states[:, 1], self.kind)
        return float(np.max(np.abs(values - values[0])) / abs(values[0]))


def _return_event(rhs, alpha0, dalpha0, backward):
    """Event whose matching crossings mark a return of (alpha, alpha') to its start."""
    if dalpha0 == 0.0:
        curvature = rhs(0.0, np.array([alpha0, 0.0]))[1]
        if curvature == 0.0:
            return None  # equilibrium
        fn = lambda t, y: y[1]  # noqa: E731
        direction = "rising" if curvature > 0.0 else "falling"
    else:
        fn = lambda t, y: y[0] - alpha0  # noqa: E731
        direction = "rising" if dalpha0 > 0.0 else "falling"
    if backward:
        direction = "falling" if direction == "rising" else "rising"
    return EventSpec(fn, direction)


def _matches_start(state, alpha0, dalpha0, tol):
    return abs(state[0] - alpha0) <= tol * max(1.0, abs(alpha0)) and abs(state[1] - dalpha0) <= tol * max(
        1.0, abs(dalpha0)
    )


def _joint_rhs(kind, orientation, settings, alpha0, dalpha0):
    base = alpha_rhs(kind)

    def rhs(t, y):
        da, dda = base(t, y)
        q = conserved_discriminant(kind, y[0], alpha0, dalpha0)
        return np.array([da, dda, theta_rate(y[0], y[1], orientation, settings, t, q)])

    return rhs


def integrate_alpha(
    kind,
    alpha0,
    dalpha0,
    t_span,
    settings=DEFAULT_SETTINGS,
    with_theta=False,
    theta0=0.0,
    orientation=1,
    stop_at_period=False,
):
    """
    Integrates the alpha equation from t = 0 to t = t_span, optionally with theta.

    Args:
        kind (str): "shrinker" or "expander".
        alpha0 (float): alpha(0) > 0.
        dalpha0 (float): alpha'(0).
        t_span (float): End time; negative values integrate backwards.
        settings (Settings): Tolerances.
        with_theta (bool): Integrate theta jointly (state becomes (alpha, alpha', theta)).
        theta0 (float): theta(0) when with_theta is set.
        orientation (int): Sign branch of theta'.
        stop_at_period (bool): End the integration at the first return to the start.

    Returns:
        tuple: (IvpSolution, period or None, critical times array).
    """
    alpha0, dalpha0, t_span = float(alpha0), float(dalpha0), float(t_span)
    if not alpha0 > 0.0:
        raise PreconditionError(f"alpha0 must be positive, got {alpha0!r}")
    if t_span == 0.0 or not np.isfinite(t_span):
        raise PreconditionError(f"t_span must be finite and non-zero, got {t_span!r}")
    if orientation not in (1, -1):
        raise PreconditionError(f"orientation must be +1 or -1, got {orientation!r}")
    rhs = alpha_rhs(kind)

    if with_theta:
        joint = _joint_rhs(kind, orientation, settings, alpha0, dalpha0)
        problem = IvpProblem(joint, 0.0, [alpha0, dalpha0, theta0], t_span)
    else:
        problem = IvpProblem(rhs, 0.0, [alpha0, dalpha0], t_span)

    return_event = _return_event(rhs, alpha0, dalpha0, backward=t_span < 0.0)
    events = [
        EventSpec(lambda t, y: y[0], "falling", terminal=True),
        return_event or EventSpec(lambda t, y: 1.0, "any"),
        EventSpec(lambda t, y: y[1], "any"),
    ]
    solution, records = integrate(problem, events=events, settings=settings)

    hit = first_event(records, _POSITIVITY)
    if hit is not None:
        raise PositivityError(
            f"alpha reached zero at t = {hit.t!r}; the initial data leave the positive regime",
            t=hit.t,
            alpha=float(hit.state[0]),
        )

    period = None
    if return_event is not None:
        for record in records:
            if record.index == _RETURN and _matches_start(
                record.state, alpha0, dalpha0, settings.period_match_tol
            ):
                period = abs(record.t)
                break
    critical = np.array([r.t for r in records if r.index == _CRITICAL])

    if stop_at_period and period is not None:
        solution = truncate(solution, np.sign(t_span) * period)
        critical = critical[np.abs(critical) <= period]
    logger.debug("alpha %s from (%g, %g): period %s", kind, alpha0, dalpha0, period)
    return solution, period, critical


def truncate(solution, t_stop):
    """Restricts a solution to [t0, t_stop] keeping the dense output of the full run."""
    direction = np.sign(solution.t_final - solution.t0)
    keep = direction * (solution.times - t_stop) < 0.0
    times = np.append(solution.times[keep], t_stop)
    states = np.vstack([solution.states[keep], solution.interpolate(t_stop)])
    return IvpSolution(times, states, solution.dense, solution.step_stats, "terminated")


def solve_alpha(kind, alpha0, dalpha0, t_span, settings=DEFAULT_SETTINGS, stop_at_period=False):
    """
    Solves the alpha equation of the given kind.

    Returns:
        AlphaSolution: The trajectory, with the period when a return was detected.
    """
    solution, period, critical = integrate_alpha(
        kind, alpha0, dalpha0, t_span, settings, stop_at_period=stop_at_period
    )
    return AlphaSolution(kind, float(alpha0), float(dalpha0), solution, period, critical)


@dataclass(frozen=True, eq=False)
class AngleFunction:
    """theta(t) obtained by joint integration with alpha; `solution` holds (alpha, alpha', theta)."""

    solution: IvpSolution = field(repr=False)
    orientation: int = 1

    def __call__(self, t):
        return self.solution(t)[..., 2]


def theta_from_alpha(alpha, theta0=0.0, orientation=1, settings=DEFAULT_SETTINGS):
    """
    Integrates theta' = orientation * sqrt(4 alpha - alpha'^2) / (2 alpha) jointly with alpha.

    Args:
        alpha (AlphaSolution): Positive alpha trajectory; its span is reused.
        theta0 (float): theta at t = 0.
        orientation (int): +1 or -1.

    Returns:
        AngleFunction: Callable theta(t) on the span of `alpha`.
    """
    solution, _, _ = integrate_alpha(
        alpha.kind,
        alpha.alpha0,
        alpha.dalpha0,
        alpha.t_final,
        settings,
        with_theta=True,
        theta0=theta0,
        orientation=orientation,
    )
    return AngleFunction(solution, orientation)


def theta_by_quadrature(alpha, t, theta0=0.0, orientation=1, settings=DEFAULT_SETTINGS):
    """Quadrature of theta' sampled from the dense output of `alpha` (cross-check oracle)."""

    def integrand(s):
        state = alpha.solution(s)
        q = conserved_discriminant(alpha.kind, state[0], alpha.alpha0, alpha.dalpha0)
        return float(theta_rate(state[0], state[1], orientation, settings, q=q))

    value, _ = quad(integrand, 0.0, float(t), epsabs=1e-13, epsrel=1e-13, limit=500)
    return theta0 + value


@dataclass(frozen=True, eq=False)
class PolarProfile:
    """u = sqrt(alpha), theta and their first two derivatives at the samples."""

    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    ddtheta: np.ndarray


@dataclass(frozen=True, eq=False)
class PolarShrinkCurve:
    """
    A planar self-similar curve rebuilt from alpha: gamma = u (cos theta, sin theta).

    Used for both kinds; `alpha.kind` tells which equation the curve solves.
    """

    alpha: AlphaSolution = field(repr=False)
    theta: AngleFunction = field(repr=False)
    theta0: float
    orientation: int
    samples: CurveSample = field(repr=False)
    profile: PolarProfile = field(repr=False)

    @property
    def kind(self):
        return self.alpha.kind

    def radius(self):
        return self.profile.u


def polar_frame(u, du, ddu, theta, dtheta, ddtheta):
    """Positions, first and second derivatives of u (cos theta, sin theta)."""
    e_r = np.column_stack([np.cos(theta), np.sin(theta)])
    e_t = np.column_stack([-np.sin(theta), np.cos(theta)])
    positions = u[:, None] * e_r
    d1 = du[:, None] * e_r + (u * dtheta)[:, None] * e_t
    d2 = (ddu - u * dtheta ** 2)[:, None] * e_r + (2.0 * du * dtheta + u * ddtheta)[:, None] * e_t
    return positions, d1, d2


def reconstruct(kind, alpha, theta0=0.0, orientation=1, n_samples=512, settings=DEFAULT_SETTINGS, t_range=None):
    """
    Samples the curve gamma = sqrt(alpha) (cos theta, sin theta) on a uniform grid.

    Args:
        kind (str): Must match `alpha.kind`.
        alpha (AlphaSolution): Positive trajectory.
        theta0 (float): theta(0).
        orientation (int): +1 or -1; the two choices give mirror-image curves.
        n_samples (int): Number of samples, at least 16.
        settings (Settings): Tolerances.
        t_range (tuple, optional): Sub-interval of the alpha span to sample.

    Returns:
        PolarShrinkCurve: The curve and its polar profile.
    """
    if alpha.kind != kind:
        raise PreconditionError(f"Expected an alpha trajectory of kind {kind!r}, got {alpha.kind!r}")
    if int(n_samples) < 16:
        raise PreconditionError(f"n_samples must be at least 16, got {n_samples}")
    angle = theta_from_alpha(alpha, theta0, orientation, settings)
    lo, hi = angle.solution.span if t_range is None else (min(t_range), max(t_range))
    t = np.linspace(lo, hi, int(n_samples))
    a, da, theta = angle.solution(t).T
    q = conserved_discriminant(kind, a, alpha.alpha0, alpha.dalpha0)
    dtheta = theta_rate(a, da, orientation, settings, t, q)

    dda = alpha_second_derivative(kind, a, da)
    u = np.sqrt(a)
    du = da / (2.0 * u)
    ddu = (dda - 2.0 * du ** 2) / (2.0 * u)
    # theta'' = theta' alpha' (sign/2 - 1/alpha), from (4 alpha - alpha'^2)' = sign alpha' (4 alpha - alpha'^2)
    ddtheta = dtheta * da * (0.5 * kind_sign(kind) - 1.0 / a)

    positions, d1, d2 = polar_frame(u, du, ddu, theta, dtheta, ddtheta)
    profile = PolarProfile(u, du, ddu, theta, dtheta, ddtheta)
    return PolarShrinkCurve(alpha, angle, float(theta0), int(orientation), CurveSample(t, positions, d1, d2), profile)


def soliton_residual(curve, kind, max_defect=1e-4):
    """
    Residual of the self-similarity equation at every sample of a unit-speed curve.

    r_i = | d2_i - acceleration(pos_i, d1_i) | with the acceleration of `kind`. Accepts a
    CurveSample or anything carrying one as `samples`.
    """
    curve = getattr(curve, "samples", curve)
    defect = arc_length_defect(curve)
    if defect > max_defect:
        raise PreconditionError(f"Curve is not parametrised by arc length (defect {defect:.3g})")
    expected = soliton_acceleration(kind, curve.positions, curve.d1)
    return ResidualReport.from_values(f"{kind} equation", np.linalg.norm(curve.d2 - expected, axis=1))


def unit_speed_theta_residual(curve):
    """max |theta'^2 u^2 + u'^2 - 1| along the curve (theta'^2 = (1 - u'^2) / u^2)."""
    p = curve.profile
    return float(np.max(np.abs(p.dtheta ** 2 * p.u ** 2 + p.du ** 2 - 1.0)))


def u_equation_residual(curve):
    """The alpha equation written for u = sqrt(alpha): u''u + u'^2 -/+ u'^2 u^2 +/- u^2 = 1."""
    p, sign = curve.profile, kind_sign(curve.kind)
    values = p.ddu * p.u + p.du ** 2 - sign * (p.du ** 2 * p.u ** 2 - p.u ** 2) - 1.0
    return ResidualReport.from_values("u equation", np.abs(values))


def polar_component_residuals(curve):
    """
    Radial and angular components of the self-similarity equation in polar form.

    Radial:  u'' - u theta'^2 = sign (u u'^2 - u)
    Angular: 2 u' theta' + u theta'' = sign u^2 u' theta'
    """
    p, sign = curve.profile, kind_sign(curve.kind)
    radial = p.ddu - p.u * p.dtheta ** 2 - sign * (p.u * p.du ** 2 - p.u)
    angular = 2.0 * p.du * p.dtheta + p.u * p.ddtheta - sign * p.u ** 2 * p.du * p.dtheta
    return (
        ResidualReport.from_values("radial component", np.abs(radial)),
        ResidualReport.from_values("angular component", np.abs(angular)),
    )


def alpha_from_samples(curve):
    """alpha = <gamma, gamma> at the samples (for round-trip checks)."""
    return np.einsum("ij,ij->i", curve.positions, curve.positions)


def alpha_equation_fd_residual(params, alpha_values, kind):
    """
    Finite-difference residual of the alpha equation on a uniform grid.

    Uses fourth-order central differences, so the first and last two samples are dropped.
    """
    h = params[1] - params[0]
    a = np.asarray(alpha_values, dtype=float)
    if a.size < 5:
        raise PreconditionError("At least 5 samples are needed for the finite-difference residual")
    da = (a[:-4] - 8.0 * a[1:-3] + 8.0 * a[3:-1] - a[4:]) / (12.0 * h)
    dda = (-a[:-4] + 16.0 * a[1:-3] - 30.0 * a[2:-2] + 16.0 * a[3:-1] - a[4:]) / (12.0 * h * h)
    residual = dda - alpha_second_derivative(kind, a[2:-2], da)
    return ResidualReport.from_values(f"{kind} alpha equation (finite differences)", np.abs(residual))


def two_sided_curve(kind, alpha0, dalpha0, span, theta0=0.0, orientation=1, n_samples=1025, settings=DEFAULT_SETTINGS):
    """
    Reconstructs the curve on [-span, span] by integrating alpha and theta both ways from t = 0.

    Returns:
        CurveSample: Samples of both halves joined at t = 0 (n_samples in total, odd counts
                     put a sample exactly at t = 0).
    """
    span = abs(float(span))
    n_half = max(16, (int(n_samples) + 1) // 2)
    halves = []
    for t_end in (-span, span):
        alpha = solve_alpha(kind, alpha0, dalpha0, t_end, settings)
        halves.append(reconstruct(kind, alpha, theta0, orientation, n_half, settings).samples)
    back, front = halves
    return CurveSample(
        np.concatenate([back.params[:-1], front.params]),
        np.vstack([back.positions[:-1], front.positions]),
        np.vstack([back.d1[:-1], front.d1]),
        np.vstack([back.d2[:-1], front.d2]),
    )
