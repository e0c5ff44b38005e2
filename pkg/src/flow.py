"""
This module evolves polygons by a semi-discrete curve shortening flow and checks the flow
against the properties that motivate self-similar solutions: the first variations of length
and enclosed area, shrinking of circles and shrinkers by the factor sqrt(1 - 2t), and
the constant area of the rescaled flow.

Key Features:
- Velocity from centred differences of the parametrisation-invariant formula
  gamma_uu / |gamma_u|^2 - <gamma_uu, gamma_u> / |gamma_u|^4 gamma_u.
- Explicit Euler steps bounded by dt <= stability_factor * (shortest edge)^2.
- Optional resampling to uniform chord length after every step (periodic cubic spline for
  closed polygons); open polygons keep their endpoints fixed.
- Lengths and signed areas recorded at every step; snapshots at requested times.
- Extinction when the enclosed area falls below `extinction_ratio` of its initial value.

Usage:
- `run = evolve(circle_polygon(256), t_end=0.4, snapshot_times=[0.1, 0.2, 0.3])`
- `length_variation_check(polygon, field)` returns the finite-difference and formula values.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import directed_hausdorff

from errors import DomainError, FlowError, PreconditionError
from settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

STATUS_COMPLETED = "completed"
STATUS_EXTINCT = "extinct"
STATUS_FAILED = "failed"


def _edges(vertices, closed):
    if closed:
        return np.roll(vertices, -1, axis=0) - vertices
    return np.diff(vertices, axis=0)


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """
    A polygon in R^n, closed or open.

    Attributes:
        vertices (numpy.ndarray): (m, n) vertices in order.
        closed (bool): Whether the last vertex connects back to the first.
    """

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] < 2:
            raise PreconditionError(f"vertices must have shape (m, n) with n >= 2, got {vertices.shape}")
        minimum = 3 if self.closed else 2
        if vertices.shape[0] < minimum:
            raise PreconditionError(f"A {'closed' if self.closed else 'open'} polygon needs {minimum} vertices")
        if not np.all(np.isfinite(vertices)):
            raise PreconditionError("vertices must be finite")
        shortest = float(np.min(np.linalg.norm(_edges(vertices, self.closed), axis=1)))
        if shortest <= DEFAULT_SETTINGS.min_edge:
            raise PreconditionError(f"Consecutive vertices must be distinct (shortest edge {shortest:.3g})")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "closed", bool(self.closed))

    @property
    def dimension(self):
        return self.vertices.shape[1]

    def __len__(self):
        return self.vertices.shape[0]

    def edges(self):
        return _edges(self.vertices, self.closed)

    def diameter(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def scaled(self, factor):
        return PolyCurve(self.vertices * factor, self.closed)


def polygon_length(curve):
    return float(np.sum(np.linalg.norm(curve.edges(), axis=1)))


def signed_area(curve):
    """Shoelace area of a closed planar polygon, positive for counter-clockwise order."""
    if not curve.closed or curve.dimension != 2:
        raise PreconditionError("The enclosed area is defined for closed planar polygons only")
    x, y = curve.vertices.T
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def radius_estimate(curve, center=None):
    """Mean distance of the vertices to `center` (default: the vertex centroid)."""
    center = curve.vertices.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    return float(np.mean(np.linalg.norm(curve.vertices - center, axis=1)))


def circle_polygon(n_vertices=256, radius=1.0, center=(0.0, 0.0)):
    """Regular polygon inscribed in a circle, counter-clockwise, first vertex on the x axis."""
    angles = 2.0 * np.pi * np.arange(int(n_vertices)) / int(n_vertices)
    vertices = radius * np.column_stack([np.cos(angles), np.sin(angles)]) + np.asarray(center, dtype=float)
    return PolyCurve(vertices, closed=True)


def polygon_from_curve(curve, closed=None, n_vertices=None):
    """
    Polygon through the sample positions of a curve.

    Args:
        curve (CurveSample or PolarShrinkCurve): Sampled curve.
        closed (bool, optional): Defaults to True when the last sample repeats the first
                                 (within 1e-9 of the diameter); the repeat is dropped.
        n_vertices (int, optional): Resample to this many vertices of equal chord length.
    """
    curve = getattr(curve, "samples", curve)
    points = np.asarray(curve.positions, dtype=float)
    scale = max(1.0, float(np.linalg.norm(points.max(axis=0) - points.min(axis=0))))
    repeats = float(np.linalg.norm(points[-1] - points[0])) <= 1e-9 * scale
    if closed is None:
        closed = repeats
    if closed and repeats:
        points = points[:-1]
    polygon = PolyCurve(points, closed)
    if n_vertices is not None:
        polygon = resample_uniform(polygon, n_vertices)
    return polygon


def resample_uniform(curve, n_vertices=None):
    """
    Redistributes the vertices at equal chord-length spacing along a cubic spline through them.

    Closed polygons use a periodic spline; open ones keep both endpoints.
    """
    n_vertices = len(curve) if n_vertices is None else int(n_vertices)
    points = curve.vertices
    if curve.closed:
        points = np.vstack([points, points[:1]])
    chords = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(s, points, axis=0, bc_type="periodic" if curve.closed else "not-a-knot")
    if curve.closed:
        targets = s[-1] * np.arange(n_vertices) / n_vertices
    else:
        targets = np.linspace(0.0, s[-1], n_vertices)
    return PolyCurve(spline(targets), curve.closed)


def flow_velocity(vertices, closed):
    """
    Discrete curve shortening velocity at every vertex.

    Open polygons get zero velocity at both endpoints.
    """
    if closed:
        prev, nxt = np.roll(vertices, 1, axis=0), np.roll(vertices, -1, axis=0)
        d1 = 0.5 * (nxt - prev)
        d2 = nxt - 2.0 * vertices + prev
    else:
        d1 = np.zeros_like(vertices)
        d2 = np.zeros_like(vertices)
        d1[1:-1] = 0.5 * (vertices[2:] - vertices[:-2])
        d2[1:-1] = vertices[2:] - 2.0 * vertices[1:-1] + vertices[:-2]
    speed2 = np.einsum("ij,ij->i", d1, d1)
    velocity = np.zeros_like(vertices)
    inner = slice(None) if closed else slice(1, -1)
    sq = speed2[inner][:, None]
    dot = np.einsum("ij,ij->i", d2[inner], d1[inner])[:, None]
    velocity[inner] = d2[inner] / sq - dot / sq ** 2 * d1[inner]
    return velocity


@dataclass(eq=False)
class FlowRun:
    """
    Result of `evolve`.

    Attributes:
        snapshots (list): (time, PolyCurve) at t = 0, the requested times and the final time.
        step_times (numpy.ndarray): Times of the initial state and of every accepted step.
        lengths (numpy.ndarray): Polygon length at each entry of `step_times`.
        areas (numpy.ndarray or None): Signed enclosed area at each entry (closed planar only).
        status (str): "completed", "extinct" or "failed".
        message (str, optional): Reason for a failed run.
    """

    snapshots: list
    step_times: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    areas: Optional[np.ndarray] = field(default=None, repr=False)
    status: str = STATUS_COMPLETED
    message: Optional[str] = None

    @property
    def final(self):
        return self.snapshots[-1]

    def snapshot_times(self):
        return [t for t, _ in self.snapshots]

    def raise_for_status(self):
        """Raises FlowError carrying the last polygon when the run failed."""
        if self.status == STATUS_FAILED:
            t, last = self.final
            raise FlowError(self.message or "Flow failed", last_curve=last, t=t)
        return self


def evolve(curve, t_end, dt_max=1e-3, resample=None, snapshot_times=(), settings=DEFAULT_SETTINGS):
    """
    Evolves a polygon by curve shortening flow until t_end or extinction.

    Args:
        curve (PolyCurve): Initial polygon.
        t_end (float): Final time, > 0.
        dt_max (float): Upper bound for the time step.
        resample (bool, optional): Resample to uniform chord length after every step;
                                   defaults to True for closed and False for open polygons.
        snapshot_times (Sequence[float]): Times in (0, t_end] at which to record the polygon;
                                          steps are shortened to land on them.
        settings (Settings): `stability_factor`, `extinction_ratio` and `min_edge`.

    Returns:
        FlowRun: Snapshots, per-step lengths and areas, and the final status.
    """
    t_end = float(t_end)
    if not t_end > 0.0:
        raise PreconditionError(f"t_end must be positive, got {t_end!r}")
    if not dt_max > 0.0:
        raise PreconditionError(f"dt_max must be positive, got {dt_max!r}")
    stops = sorted({float(t) for t in snapshot_times})
    if stops and (stops[0] <= 0.0 or stops[-1] > t_end):
        raise PreconditionError(f"Snapshot times must lie in (0, {t_end}]")
    resample = curve.closed if resample is None else bool(resample)
    with_area = curve.closed and curve.dimension == 2

    vertices = np.array(curve.vertices)
    closed = curve.closed
    t = 0.0
    current = (0.0, curve)
    snapshots = [(0.0, curve)]
    step_times, lengths = [0.0], [polygon_length(curve)]
    areas = [signed_area(curve)] if with_area else None
    initial_area = abs(areas[0]) if with_area else None
    status, message = STATUS_COMPLETED, None
    pending = [s for s in stops if s < t_end] + [t_end]

    while pending:
        shortest = float(np.min(np.linalg.norm(_edges(vertices, closed), axis=1)))
        if shortest <= settings.min_edge:
            status = STATUS_FAILED
            message = f"Edge collapsed below {settings.min_edge} at t = {t:.9g}"
            break
        dt = min(dt_max, settings.stability_factor * shortest ** 2, pending[0] - t)
        vertices = vertices + dt * flow_velocity(vertices, closed)
        t = pending[0] if pending[0] - t <= dt else t + dt
        if not np.all(np.isfinite(vertices)):
            status, message = STATUS_FAILED, f"Non-finite vertices at t = {t:.9g}"
            break

        try:
            polygon = PolyCurve(vertices, closed)
            if resample:
                polygon = resample_uniform(polygon)
        except PreconditionError as exc:
            status, message = STATUS_FAILED, f"Polygon degenerated at t = {t:.9g}: {exc}"
            break
        vertices = np.array(polygon.vertices)
        current = (t, polygon)
        step_times.append(t)
        lengths.append(polygon_length(polygon))
        if with_area:
            areas.append(signed_area(polygon))
            if abs(areas[-1]) < settings.extinction_ratio * initial_area:
                status = STATUS_EXTINCT
                snapshots.append((t, polygon))
                logger.info("Extinct at t = %.6g after %d steps", t, len(step_times) - 1)
                break
        if t == pending[0]:
            pending.pop(0)
            snapshots.append((t, polygon))
            logger.debug("Snapshot at t = %.6g: length %.9g", t, lengths[-1])

    if status == STATUS_FAILED:
        logger.warning("Flow failed: %s", message)
        if current[0] > snapshots[-1][0]:
            snapshots.append(current)
    return FlowRun(
        snapshots=snapshots,
        step_times=np.array(step_times),
        lengths=np.array(lengths),
        areas=None if areas is None else np.array(areas),
        status=status,
        message=message,
    )


class VariationCheck(NamedTuple):
    numeric: float
    formula: float

    def relative_difference(self, scale=None):
        scale = max(abs(self.formula), abs(self.numeric)) if scale is None else scale
        return abs(self.numeric - self.formula) / scale if scale else 0.0


def _variation_inputs(curve, variation_field):
    if not curve.closed:
        raise PreconditionError("First variations are computed for closed polygons")
    field_values = np.asarray(variation_field, dtype=float)
    if field_values.shape != curve.vertices.shape:
        raise PreconditionError(
            f"variation_field must match the vertices, got {field_values.shape} vs {curve.vertices.shape}"
        )
    return field_values, 1e-6 * curve.diameter()


def _displaced(curve, field_values, eps):
    return PolyCurve(curve.vertices + eps * field_values, True), PolyCurve(curve.vertices - eps * field_values, True)


def length_variation_check(curve, variation_field):
    """
    d/dt length(x + t V) at t = 0 two ways.

    numeric: central difference with step 1e-6 times the diameter.
    formula: -sum_i <V_i, T_i - T_(i-1)>, T_i the unit tangent of edge i; the discrete form of
    -integral <V, gamma_ss> ds.
    """
    field_values, eps = _variation_inputs(curve, variation_field)
    plus, minus = _displaced(curve, field_values, eps)
    numeric = (polygon_length(plus) - polygon_length(minus)) / (2.0 * eps)

    edges = curve.edges()
    tangents = edges / np.linalg.norm(edges, axis=1)[:, None]
    curvature_vectors = tangents - np.roll(tangents, 1, axis=0)
    formula = -float(np.sum(np.einsum("ij,ij->i", field_values, curvature_vectors)))
    return VariationCheck(float(numeric), formula)


def area_variation_check(curve, variation_field):
    """
    d/dt area(x + t V) at t = 0 two ways for a closed planar polygon.

    formula: sum_i <V_i, nu_i> with nu_i = ((y_(i+1) - y_(i-1)) / 2, (x_(i-1) - x_(i+1)) / 2), the
    vertex normal weighted by length that points outwards for counter-clockwise polygons.
    """
    field_values, eps = _variation_inputs(curve, variation_field)
    if curve.dimension != 2:
        raise PreconditionError("Area variation needs a planar polygon")
    plus, minus = _displaced(curve, field_values, eps)
    numeric = (signed_area(plus) - signed_area(minus)) / (2.0 * eps)

    x, y = curve.vertices.T
    normals = 0.5 * np.column_stack([np.roll(y, -1) - np.roll(y, 1), np.roll(x, 1) - np.roll(x, -1)])
    formula = float(np.sum(np.einsum("ij,ij->i", field_values, normals)))
    return VariationCheck(float(numeric), formula)


def homothety_scale(t):
    """c(t) = 1 / sqrt(1 - 2t), undefined from t = 1/2 on."""
    if t >= 0.5:
        raise DomainError(f"1 / sqrt(1 - 2t) is undefined at t = {t}")
    return 1.0 / math.sqrt(1.0 - 2.0 * t)


def rescaled_flow_area(run, c=homothety_scale):
    """
    Areas of c(t) * gamma_t at every recorded step: c(t)^2 times the raw area.

    Raises:
        DomainError: c is undefined or not finite at a recorded time.
    """
    if run.areas is None:
        raise PreconditionError("Rescaled areas need a closed planar run")
    result = []
    for t, area in zip(run.step_times, run.areas):
        try:
            factor = float(c(float(t)))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"Scale factor undefined at t = {t}: {exc}") from exc
        if not math.isfinite(factor):
            raise DomainError(f"Scale factor is not finite at t = {t}")
        result.append((float(t), factor * factor * float(area)))
    return result


def densify(vertices, closed, factor):
    """Inserts factor - 1 equally spaced points on every edge."""
    points = np.vstack([vertices, vertices[:1]]) if closed else vertices
    weights = np.arange(factor)[:, None] / factor
    segments = points[:-1, None, :] * (1.0 - weights) + points[1:, None, :] * weights
    dense = segments.reshape(-1, points.shape[1])
    return dense if closed else np.vstack([dense, points[-1:]])


def hausdorff_distance(a, b, densify_factor=8):
    """Symmetric Hausdorff distance between two polygons, each refined along its edges."""
    pa = densify(a.vertices, a.closed, densify_factor)
    pb = densify(b.vertices, b.closed, densify_factor)
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def homothety_check(run, center=None, densify_factor=8):
    """
    For every snapshot with t < 1/2: Hausdorff distance between the snapshot scaled by
    1/sqrt(1 - 2t) about `center` and the initial polygon, divided by its diameter.

    Returns:
        list[tuple]: (time, relative distance) pairs.
    """
    _, initial = run.snapshots[0]
    center = np.zeros(initial.dimension) if center is None else np.asarray(center, dtype=float)
    diameter = initial.diameter()
    result = []
    for t, polygon in run.snapshots:
        if t >= 0.5:
            continue
        rescaled = PolyCurve((polygon.vertices - center) * homothety_scale(t) + center, polygon.closed)
        result.append((t, hausdorff_distance(rescaled, initial, densify_factor) / diameter))
    return result


def extinction_time(run, fraction=0.01):
    """First recorded time at which |area| drops below `fraction` of its initial value."""
    if run.areas is None:
        raise PreconditionError("Extinction time needs a closed planar run")
    below = np.nonzero(np.abs(run.areas) < fraction * abs(run.areas[0]))[0]
    return float(run.step_times[below[0]]) if below.size else None
