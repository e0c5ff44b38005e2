"""
This module integrates explicit initial value problems for every solver in the toolkit.
The adaptive path steps SciPy's Dormand-Prince 8(5,3) pair one step at a time so that
zero crossings of user event functions can be located inside each accepted step on the
step's dense output. A classical fixed-step Runge-Kutta method serves as an independent
oracle for cross-checks.

Key Features:
- Adaptive integration with dense output and per-step statistics (accepted, rejected,
  right-hand side evaluations).
- Event detection with direction filtering (rising, falling, any), bisection refinement
  and optional termination.
- Dense output that reproduces the stored states exactly at accepted nodes.
- Errors carrying the last good time and state on step-size underflow or non-finite
  right-hand side values.

Usage:
- Wrap the system in an `IvpProblem(rhs, t0, y0, t_end)`.
- Call `integrate(problem, events=[EventSpec(fn, "rising")])`; it returns the solution and
  the list of detected `EventRecord`s.
- Call `integrate_fixed(problem, n_steps)` for the fixed-step oracle.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.interpolate import CubicHermiteSpline

from errors import NonFiniteError, PreconditionError, StepSizeUnderflowError
from settings import DEFAULT_SETTINGS, MAX_TOLERANCE

logger = logging.getLogger(__name__)

DIRECTIONS = ("rising", "falling", "any")


@dataclass(frozen=True, eq=False)
class IvpProblem:
    """
    y' = rhs(t, y) with y(t0) = y0, integrated towards t_end.

    The integration direction is the sign of t_end - t0.
    """

    rhs: Callable
    t0: float
    y0: np.ndarray
    t_end: float
    dimension: Optional[int] = None

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float).reshape(-1)
        if self.dimension is not None and y0.size != self.dimension:
            raise PreconditionError(f"y0 has {y0.size} components, dimension is {self.dimension}")
        if not np.all(np.isfinite(y0)):
            raise PreconditionError("y0 must be finite")
        if float(self.t_end) == float(self.t0):
            raise PreconditionError("t_end must differ from t0")
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "dimension", y0.size)

    @property
    def direction(self):
        return 1.0 if self.t_end > self.t0 else -1.0


@dataclass(frozen=True)
class EventSpec:
    """A scalar function of (t, y) whose zero crossings are reported."""

    event_fn: Callable
    direction: str = "any"
    terminal: bool = False

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise PreconditionError(f"Event direction must be one of {DIRECTIONS}, got {self.direction!r}")

    def crosses(self, g_old, g_new):
        """True when the step from g_old to g_new crosses zero in this event's direction."""
        if g_old == 0.0:
            # A zero at the start of a step belongs to the previous step (or to t0).
            return False
        rising = g_old < 0.0 <= g_new
        falling = g_old > 0.0 >= g_new
        if self.direction == "rising":
            return rising
        if self.direction == "falling":
            return falling
        return rising or falling


@dataclass(frozen=True, eq=False)
class EventRecord:
    index: int
    t: float
    state: np.ndarray


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evaluations: int = 0


@dataclass(eq=False)
class IvpSolution:
    """
    Accepted step times and states with a dense interpolant.

    Attributes:
        times (numpy.ndarray): Strictly monotone node times, t0 first.
        states (numpy.ndarray): (len(times), dimension) states at the nodes.
        step_stats (StepStats): Accepted/rejected counts and evaluations.
        status (str): "completed", or "terminated" when a terminal event stopped the run.
    """

    times: np.ndarray
    states: np.ndarray
    dense: Callable = field(repr=False)
    step_stats: StepStats = field(default_factory=StepStats)
    status: str = "completed"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self._order = np.argsort(self.times)
        self._sorted_times = self.times[self._order]

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t_final(self):
        return float(self.times[-1])

    @property
    def span(self):
        return float(self._sorted_times[0]), float(self._sorted_times[-1])

    def interpolate(self, t):
        """
        Evaluates the dense output.

        Args:
            t (float or array_like): Query time(s) inside the integrated span.

        Returns:
            numpy.ndarray: State of shape (dimension,) for a scalar query, otherwise
                           (len(t), dimension).
        """
        t_arr = np.asarray(t, dtype=float)
        queries = np.atleast_1d(t_arr)
        lo, hi = self.span
        slack = 1e-12 * max(1.0, hi - lo)
        if np.any(queries < lo - slack) or np.any(queries > hi + slack):
            raise PreconditionError(f"Interpolation outside the integrated span [{lo}, {hi}]")
        values = np.array(self.dense(np.clip(queries, lo, hi)), dtype=float).reshape(queries.size, -1)

        # Accepted nodes return the stored states bit for bit
        pos = np.clip(np.searchsorted(self._sorted_times, queries), 0, self.times.size - 1)
        hit = self._sorted_times[pos] == queries
        values[hit] = self.states[self._order[pos[hit]]]
        return values[0] if t_arr.ndim == 0 else values

    __call__ = interpolate


def _validate_tolerances(rel_tol, abs_tol):
    for name, value in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 0.0 < value <= MAX_TOLERANCE:
            raise PreconditionError(f"{name} must lie in (0, {MAX_TOLERANCE}], got {value!r}")


def _checked_rhs(problem, counter):
    def fun(t, y):
        counter[0] += 1
        dy = np.asarray(problem.rhs(t, y), dtype=float).reshape(-1)
        if dy.size != problem.dimension:
            raise PreconditionError(f"rhs returned {dy.size} components, expected {problem.dimension}")
        if not np.all(np.isfinite(dy)):
            raise NonFiniteError(f"Right-hand side is not finite at t = {t!r}", t=t, state=np.array(y))
        return dy

    return fun


def _locate_event(spec, interp, t_lo, g_lo, t_hi, tol):
    """Bisects on the dense output of one step until the bracket is narrower than tol."""
    while abs(t_hi - t_lo) > tol:
        t_mid = 0.5 * (t_lo + t_hi)
        if t_mid == t_lo or t_mid == t_hi:
            break
        g_mid = spec.event_fn(t_mid, interp(t_mid))
        if g_mid != 0.0 and np.sign(g_mid) == np.sign(g_lo):
            t_lo, g_lo = t_mid, g_mid
        else:
            t_hi = t_mid
    return t_hi


def integrate(problem, rel_tol=None, abs_tol=None, events=(), settings=DEFAULT_SETTINGS):
    """
    Integrates an initial value problem with adaptive step size control.

    Args:
        problem (IvpProblem): The system to integrate.
        rel_tol (float, optional): Relative tolerance, default `settings.rel_tol`.
        abs_tol (float, optional): Absolute tolerance, default `settings.abs_tol`.
        events (Sequence[EventSpec]): Event functions to monitor.
        settings (Settings): Tolerance defaults and event time tolerance.

    Returns:
        tuple: (IvpSolution, list of EventRecord) with events in order of occurrence.
    """
    rel_tol = settings.rel_tol if rel_tol is None else rel_tol
    abs_tol = settings.abs_tol if abs_tol is None else abs_tol
    _validate_tolerances(rel_tol, abs_tol)
    events = list(events)

    counter = [0]
    fun = _checked_rhs(problem, counter)
    try:
        solver = DOP853(fun, problem.t0, problem.y0, problem.t_end, rtol=rel_tol, atol=abs_tol)
    except NonFiniteError as exc:
        raise NonFiniteError(str(exc), t=problem.t0, state=problem.y0.copy()) from exc

    event_tol = settings.event_tol * abs(problem.t_end - problem.t0)
    times = [problem.t0]
    states = [problem.y0.copy()]
    interpolants = []
    records = []
    stats = StepStats()
    status = "completed"
    g_values = [spec.event_fn(problem.t0, problem.y0) for spec in events]

    while solver.status == "running":
        t_old, y_old = solver.t, solver.y.copy()
        before = counter[0]
        try:
            message = solver.step()
        except NonFiniteError as exc:
            raise NonFiniteError(str(exc), t=t_old, state=y_old) from exc
        if solver.status == "failed":
            raise StepSizeUnderflowError(
                f"Integration stopped at t = {t_old!r}: {message}", t=t_old, state=y_old
            )
        attempts = max(1, (counter[0] - before) // solver.n_stages)
        stats.accepted += 1
        stats.rejected += attempts - 1

        t_new, y_new = solver.t, solver.y.copy()
        interp = solver.dense_output()

        # Crossings inside this step, earliest first along the integration direction
        found = []
        for index, spec in enumerate(events):
            g_new = spec.event_fn(t_new, y_new)
            if spec.crosses(g_values[index], g_new):
                t_event = _locate_event(spec, interp, t_old, g_values[index], t_new, event_tol)
                found.append((problem.direction * t_event, index, t_event))
            g_values[index] = g_new
        found.sort()

        terminal_at = None
        for _, index, t_event in found:
            state = y_new.copy() if t_event == t_new else np.asarray(interp(t_event), dtype=float)
            records.append(EventRecord(index, t_event, state))
            logger.debug("Event %d at t = %.15g", index, t_event)
            if events[index].terminal:
                terminal_at = (t_event, state)
                break

        interpolants.append(interp)
        if terminal_at is not None:
            times.append(terminal_at[0])
            states.append(terminal_at[1])
            status = "terminated"
            break
        times.append(t_new)
        states.append(y_new)

    stats.rhs_evaluations = counter[0]
    dense = OdeSolution(np.array(times), interpolants)
    logger.debug(
        "Integrated [%g, %g]: %d accepted, %d rejected steps, %d rhs evaluations",
        problem.t0, times[-1], stats.accepted, stats.rejected, stats.rhs_evaluations,
    )
    solution = IvpSolution(np.array(times), np.array(states), lambda ts: dense(ts).T, stats, status)
    return solution, records


def integrate_fixed(problem, n_steps):
    """
    Integrates with the classical fourth-order Runge-Kutta method on a uniform grid.

    Args:
        problem (IvpProblem): The system to integrate.
        n_steps (int): Number of steps, at least 1.

    Returns:
        IvpSolution: Nodes on the uniform grid with a cubic Hermite interpolant.

    Between nodes the interpolant uses the stored states and slopes; its O(h^4) error matches
    the global order of the method, so dense values are as accurate as the nodes up to a
    constant. Compare at the nodes when the full accuracy matters.
    """
    n_steps = int(n_steps)
    if n_steps < 1:
        raise PreconditionError(f"n_steps must be at least 1, got {n_steps}")
    counter = [0]
    fun = _checked_rhs(problem, counter)

    h = (problem.t_end - problem.t0) / n_steps
    times = problem.t0 + h * np.arange(n_steps + 1)
    times[-1] = problem.t_end
    states = np.empty((n_steps + 1, problem.dimension))
    slopes = np.empty_like(states)
    y = problem.y0.copy()
    states[0] = y
    for k in range(n_steps):
        t = times[k]
        try:
            k1 = fun(t, y)
            k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = fun(t + h, y + h * k3)
        except NonFiniteError as exc:
            raise NonFiniteError(str(exc), t=t, state=y.copy()) from exc
        slopes[k] = k1
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[k + 1] = y
    slopes[-1] = fun(times[-1], y)

    # CubicHermiteSpline wants increasing abscissae
    order = slice(None) if h > 0 else slice(None, None, -1)
    spline = CubicHermiteSpline(times[order], states[order], slopes[order], axis=0)
    stats = StepStats(accepted=n_steps, rejected=0, rhs_evaluations=counter[0])
    return IvpSolution(times, states, spline, stats)


def first_event(records, index):
    """Returns the first record for the given event index, or None."""
    for record in records:
        if record.index == index:
            return record
    return None

