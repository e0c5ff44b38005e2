"""
This module integrates self-similar curves directly in R^n and checks the properties that
hold for them: planarity through the conserved combination v = r gamma' + s gamma'', the
third-derivative identity, and the shrinker equations written in spherical coordinates.

Key Features:
- `integrate_soliton` solves gamma'' = -/+ gamma^perp as a first-order system of size 2n.
- `verify_planarity` transports (r, s) along a curve and reports how far v drifts, together
  with the best-fit plane and the distance to span{gamma(0), gamma'(0)}.
- `triple_derivative_check` compares finite-difference gamma''' with the identity
  gamma''' = -|gamma''|^2 gamma' +/- <gamma, gamma'> gamma''.
- `spherical_residuals` evaluates the radial, azimuthal and polar shrinker equations and the
  unit-speed constraint in (u, theta, phi) coordinates.
- `soliton_from_polar` lifts a planar curve into R^n through an orthonormal 2-frame.

Usage:
- `curve = integrate_soliton(SolitonSpec("shrinker", p0, v0, 10.0))`
- `report = verify_planarity(curve, "shrinker")`; `report.v_drift` is the planarity witness.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BPoly

from errors import DomainError, PreconditionError
from geometry import (
    CurveSample,
    PlaneFit,
    ResidualReport,
    as_vec,
    distance_to_span,
    fit_plane,
    kind_sign,
    soliton_acceleration,
)
from ode_engine import IvpProblem, integrate
from settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

SOLITON_KINDS = ("shrinker", "expander")


@dataclass(frozen=True, eq=False)
class SolitonSpec:
    """
    Initial data gamma(0) = p0, gamma'(0) = v0 for a self-similar curve in R^n.

    Attributes:
        kind (str): "shrinker" or "expander".
        p0 (numpy.ndarray): Initial point.
        v0 (numpy.ndarray): Initial unit tangent.
        t_span (float): Arc length to integrate, negative for backwards.
        settings (Settings): Tolerances.
    """

    kind: str
    p0: np.ndarray
    v0: np.ndarray
    t_span: float
    settings: object = field(default=DEFAULT_SETTINGS, repr=False)

    def __post_init__(self):
        if self.kind not in SOLITON_KINDS:
            raise PreconditionError(f"kind must be one of {SOLITON_KINDS}, got {self.kind!r}")
        p0 = as_vec(self.p0)
        v0 = as_vec(self.v0, p0.size)
        if abs(np.linalg.norm(v0) - 1.0) > self.settings.unit_tol:
            raise PreconditionError(f"v0 must have unit length, got |v0| = {np.linalg.norm(v0)!r}")
        t_span = float(self.t_span)
        if t_span == 0.0 or not np.isfinite(t_span):
            raise PreconditionError(f"t_span must be finite and non-zero, got {self.t_span!r}")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "t_span", t_span)

    @property
    def dimension(self):
        return self.p0.size


def soliton_rhs(kind, dimension):
    """(gamma, gamma')' = (gamma', acceleration) for the 2n-dimensional state."""

    def rhs(t, y):
        p, v = y[:dimension], y[dimension:]
        return np.concatenate([v, soliton_acceleration(kind, p, v)])

    return rhs


def integrate_soliton(spec, n_samples=2001):
    """
    Integrates a self-similar curve from its initial data.

    Args:
        spec (SolitonSpec): Kind, initial point and tangent, span and settings.
        n_samples (int): Number of uniformly spaced samples returned.

    Returns:
        CurveSample: Positions and first derivatives from the dense output; second derivatives
                     from the equation itself.
    """
    n = spec.dimension
    problem = IvpProblem(soliton_rhs(spec.kind, n), 0.0, np.concatenate([spec.p0, spec.v0]), spec.t_span)
    solution, _ = integrate(problem, settings=spec.settings)
    t = np.linspace(min(0.0, spec.t_span), max(0.0, spec.t_span), int(n_samples))
    states = solution(t)
    positions, d1 = states[:, :n], states[:, n:]
    d2 = soliton_acceleration(spec.kind, positions, d1)
    logger.debug(
        "Integrated %s in R^%d over %g: %d steps", spec.kind, n, spec.t_span, solution.step_stats.accepted
    )
    return CurveSample(t, positions, d1, d2)


def plane_confinement(curve, p0=None, v0=None):
    """
    max_i dist(gamma_i, span{p0, v0}) / (1 + |gamma_i|), the span taken through the origin.

    p0 and v0 default to the first sample's position and tangent.
    """
    p0 = curve.positions[0] if p0 is None else as_vec(p0, curve.dimension)
    v0 = curve.d1[0] if v0 is None else as_vec(v0, curve.dimension)
    distances = distance_to_span(curve.positions, [p0, v0])
    return float(np.max(distances / (1.0 + np.linalg.norm(curve.positions, axis=1))))


def soliton_from_polar(curve, dimension=3, frame=None, settings=DEFAULT_SETTINGS):
    """
    Lifts a planar curve into R^n: x -> E x with E an (n, 2) matrix of orthonormal columns.

    Args:
        curve (CurveSample or PolarShrinkCurve): Planar curve.
        dimension (int): Target dimension n >= 2.
        frame (array_like, optional): (n, 2) frame; defaults to the first two coordinate axes.
    """
    curve = getattr(curve, "samples", curve)
    if curve.dimension != 2:
        raise PreconditionError(f"Expected a planar curve, got dimension {curve.dimension}")
    if frame is None:
        return curve.embed(int(dimension))
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (int(dimension), 2):
        raise PreconditionError(f"frame must have shape ({dimension}, 2), got {frame.shape}")
    if np.max(np.abs(frame.T @ frame - np.eye(2))) > settings.orthogonality_tol * 10:
        raise PreconditionError("frame columns must be orthonormal")
    return CurveSample(curve.params, curve.positions @ frame.T, curve.d1 @ frame.T, curve.d2 @ frame.T)


def rs_rhs(kind, a_fn, b_fn):
    """
    Right-hand side of the (r, s) system keeping v = r gamma' + s gamma'' constant.

    With a = <gamma, gamma> and b = <gamma, gamma'> both kinds give r' = s (a - b^2); the
    second equation is s' = -s b - r for shrinkers and s' = s b - r for expanders.
    """
    sign = kind_sign(kind)

    def rhs(t, y):
        r, s = y
        a, b = a_fn(t), b_fn(t)
        return np.array([s * (a - b * b), -sign * s * b - r])

    return rhs


@dataclass(frozen=True, eq=False)
class PlanarityReport:
    """
    Planarity witnesses for a self-similar curve.

    Attributes:
        rs_solutions (tuple): Two (m, 2) arrays of (r, s) at the curve samples, started from
                              (1, 0) and (0, 1).
        v_drift (float): max over samples of |v(t) - v(t_0)| for both trajectories.
        plane (PlaneFit): Best-fit plane of the positions.
        spanned_by_initial (float): plane_confinement of the curve about its first sample.
        degenerate (bool): gamma'' vanishes everywhere (a straight line).
        v_paths (tuple): The two (m, n) arrays of v along the curve.
    """

    rs_solutions: tuple = field(repr=False)
    v_drift: float
    plane: PlaneFit
    spanned_by_initial: float
    degenerate: bool = False
    v_paths: tuple = field(default=(), repr=False)

    def combined_drift(self, c1, c2):
        """Drift of v for the (r, s) solution c1 * first + c2 * second."""
        v = c1 * self.v_paths[0] + c2 * self.v_paths[1]
        return float(np.max(np.linalg.norm(v - v[0], axis=1)))


def verify_planarity(curve, kind, settings=DEFAULT_SETTINGS):
    """
    Transports (r, s) along the curve and measures the drift of v = r gamma' + s gamma''.

    gamma between samples is the quintic Hermite interpolant of the stored positions, d1 and
    d2, and gamma' is its derivative. The transport runs at `transport_rel_tol` and
    `transport_abs_tol`, well below the tolerances the curve itself was built with.

    Args:
        curve (CurveSample): Unit-speed curve with d1 and d2.
        kind (str): "shrinker" or "expander".
        settings (Settings): Tolerances; `line_curvature_tol` detects straight lines.

    Returns:
        PlanarityReport: Drift, plane fit and confinement to the initial span.
    """
    curve = getattr(curve, "samples", curve)
    kind_sign(kind)
    if len(curve) < 3:
        raise PreconditionError("verify_planarity needs at least 3 samples")
    degenerate = bool(np.max(np.linalg.norm(curve.d2, axis=1)) < settings.line_curvature_tol)
    if degenerate:
        logger.info("Curve has vanishing second derivative; treating it as a straight line")

    t = curve.params
    position = BPoly.from_derivatives(t, np.stack([curve.positions, curve.d1, curve.d2], axis=1))
    tangent = position.derivative()
    a_fn = lambda s: float(np.dot(position(s), position(s)))  # noqa: E731
    b_fn = lambda s: float(np.dot(position(s), tangent(s)))  # noqa: E731
    rhs = rs_rhs(kind, a_fn, b_fn)

    rs_solutions, v_paths = [], []
    for start in ((1.0, 0.0), (0.0, 1.0)):
        problem = IvpProblem(rhs, t[0], start, t[-1])
        solution, _ = integrate(
            problem, rel_tol=settings.transport_rel_tol, abs_tol=settings.transport_abs_tol, settings=settings
        )
        rs = solution(t)
        rs_solutions.append(rs)
        v_paths.append(rs[:, :1] * curve.d1 + rs[:, 1:] * curve.d2)
    v_drift = max(float(np.max(np.linalg.norm(v - v[0], axis=1))) for v in v_paths)

    report = PlanarityReport(
        rs_solutions=tuple(rs_solutions),
        v_drift=v_drift,
        plane=fit_plane(curve),
        spanned_by_initial=plane_confinement(curve),
        degenerate=degenerate,
        v_paths=tuple(v_paths),
    )
    logger.debug("Planarity of %s: v drift %.3g, plane residual %.3g", kind, v_drift, report.plane.max_residual)
    return report


def _uniform_step(params):
    h = np.diff(params)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise PreconditionError("Finite differences need a uniform parameter grid")
    return float(h[0])


def triple_derivative_check(curve, kind):
    """
    Compares gamma''' from fourth-order central differences of d2 with
    -|gamma''|^2 gamma' + sign <gamma, gamma'> gamma'' (sign +1 for shrinkers, -1 for expanders).

    The first and last two samples have no centred stencil and are left out.
    """
    curve = getattr(curve, "samples", curve)
    sign = kind_sign(kind)
    if len(curve) < 5:
        raise PreconditionError("triple_derivative_check needs at least 5 samples")
    h = _uniform_step(curve.params)
    d2 = curve.d2
    d3 = (d2[:-4] - 8.0 * d2[1:-3] + 8.0 * d2[3:-1] - d2[4:]) / (12.0 * h)

    pos, d1, mid = curve.positions[2:-2], curve.d1[2:-2], d2[2:-2]
    curvature2 = np.einsum("ij,ij->i", mid, mid)
    b = np.einsum("ij,ij->i", pos, d1)
    identity = -curvature2[:, None] * d1 + sign * b[:, None] * mid
    return ResidualReport.from_values(f"{kind} third derivative", np.linalg.norm(d3 - identity, axis=1))


@dataclass(frozen=True)
class SphericalResiduals:
    """Max-norm residuals of the spherical-coordinate equations; `skipped` counts singular samples."""

    res_radial: float
    res_theta: float
    res_phi: float
    res_speed: float
    skipped: int = 0
    evaluated: int = 0


def spherical_coordinates(positions, d1, d2):
    """
    (u, theta, phi) and their first two derivatives from Cartesian samples in R^3.

    theta is the azimuth about the z axis and phi the angle from it. Rows on the z axis give
    non-finite angle derivatives; callers mask them.
    """
    x, y, z = positions.T
    dx, dy, dz = d1.T
    ddx, ddy, ddz = d2.T

    u = np.linalg.norm(positions, axis=1)
    du = np.einsum("ij,ij->i", positions, d1) / u
    ddu = (np.einsum("ij,ij->i", d1, d1) + np.einsum("ij,ij->i", positions, d2) - du ** 2) / u

    rho2 = x * x + y * y
    rho = np.sqrt(rho2)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = x * dy - y * dx
        radial = x * dx + y * dy
        dtheta = cross / rho2
        ddtheta = (x * ddy - y * ddx) / rho2 - 2.0 * cross * radial / rho2 ** 2

        drho = radial / rho
        ddrho = (dx * dx + dy * dy + x * ddx + y * ddy) / rho - drho ** 2 / rho
        phi = np.arctan2(rho, z)
        dphi = (z * drho - rho * dz) / u ** 2
        ddphi = (z * ddrho - rho * ddz) / u ** 2 - 2.0 * du * dphi / u
    theta = np.arctan2(y, x)
    return u, du, ddu, theta, dtheta, ddtheta, phi, dphi, ddphi


def spherical_residuals(curve, kind="shrinker", settings=DEFAULT_SETTINGS):
    """
    Residuals of the self-similarity equation in spherical coordinates:

        u'' - sin^2(phi) u theta'^2 - u phi'^2 = sign (u u'^2 - u)
        2 u' theta' + u theta'' + 2 u theta' phi' cot(phi) = sign u^2 u' theta'
        2 u' phi' - u theta'^2 sin(phi) cos(phi) + u phi'' = sign u^2 u' phi'
        u'^2 + u^2 theta'^2 sin^2(phi) + u^2 phi'^2 = 1

    with sign +1 for shrinkers. Samples closer than `origin_tol` to the origin or with
    sin(phi) < `polar_axis_tol` are skipped and counted.

    Raises:
        DomainError: Every sample is singular.
    """
    curve = getattr(curve, "samples", curve)
    if curve.dimension != 3:
        raise PreconditionError(f"Spherical residuals need a curve in R^3, got R^{curve.dimension}")
    sign = kind_sign(kind)
    norms = np.linalg.norm(curve.positions, axis=1)
    sin_phi = np.divide(
        np.linalg.norm(curve.positions[:, :2], axis=1), norms, out=np.zeros_like(norms), where=norms > 0.0
    )
    keep = (norms >= settings.origin_tol) & (sin_phi >= settings.polar_axis_tol)
    skipped = int(np.count_nonzero(~keep))
    if not np.any(keep):
        raise DomainError("All samples lie on the polar axis or at the origin")

    u, du, ddu, _, dtheta, ddtheta, phi, dphi, ddphi = spherical_coordinates(
        curve.positions[keep], curve.d1[keep], curve.d2[keep]
    )
    s, c = np.sin(phi), np.cos(phi)
    radial = ddu - s ** 2 * u * dtheta ** 2 - u * dphi ** 2 - sign * (u * du ** 2 - u)
    azimuthal = 2.0 * du * dtheta + u * ddtheta + 2.0 * u * dtheta * dphi * c / s - sign * u ** 2 * du * dtheta
    polar = 2.0 * du * dphi - u * dtheta ** 2 * s * c + u * ddphi - sign * u ** 2 * du * dphi
    speed = du ** 2 + (u * dtheta * s) ** 2 + (u * dphi) ** 2 - 1.0
    if skipped:
        logger.info("Spherical residuals skipped %d singular samples", skipped)
    return SphericalResiduals(
        res_radial=float(np.max(np.abs(radial))),
        res_theta=float(np.max(np.abs(azimuthal))),
        res_phi=float(np.max(np.abs(polar))),
        res_speed=float(np.max(np.abs(speed))),
        skipped=skipped,
        evaluated=int(np.count_nonzero(keep)),
    )
