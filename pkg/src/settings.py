"""
This module holds the numerical settings shared by every solver in the toolkit.
All tolerances quoted by the solvers live in one frozen dataclass, so a single object
can be passed through a whole pipeline and overridden from the command line.

Key Features:
- Default tolerances for integration, orthogonality checks, period and closure detection.
- Reads the `CSF_TOL` environment variable as a relative tolerance override.
- Produces modified copies via `with_overrides` without mutating the defaults.

Usage:
- Use `DEFAULT_SETTINGS` when nothing is configured.
- Call `Settings.from_env()` at program start to honour `CSF_TOL`.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass

from errors import PreconditionError

logger = logging.getLogger(__name__)

ENV_TOLERANCE = "CSF_TOL"
MAX_TOLERANCE = 1e-2


@dataclass(frozen=True)
class Settings:
    """Tolerances and numerical constants used across the toolkit."""

    # Adaptive integrator
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-12  # relative to |t_end - t0|

    # (r, s) transport along a sampled curve
    transport_rel_tol: float = 1e-13
    transport_abs_tol: float = 1e-14

    # Vector checks
    orthogonality_tol: float = 1e-12
    unit_tol: float = 1e-12

    # Alpha trajectories and closure detection
    period_match_tol: float = 1e-8
    closure_gap_tol: float = 1e-6
    closure_position_tol: float = 1e-5  # times the curve diameter
    bisection_tol: float = 1e-10
    reconstruction_clamp: float = 1e-10

    # Degenerate geometry
    line_curvature_tol: float = 1e-10
    polar_axis_tol: float = 1e-8
    origin_tol: float = 1e-8

    # Polygonal flow
    extinction_ratio: float = 1e-4
    stability_factor: float = 0.25
    min_edge: float = 1e-12

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "transport_rel_tol", "transport_abs_tol"):
            value = getattr(self, name)
            if not 0.0 < value <= MAX_TOLERANCE:
                raise PreconditionError(f"{name} must lie in (0, {MAX_TOLERANCE}], got {value!r}")

    def with_overrides(self, **overrides):
        """
        Returns a copy of the settings with the given fields replaced.

        Args:
            **overrides: Field names and their new values. `None` values are ignored
                         so optional CLI flags can be passed straight through.

        Returns:
            Settings: The updated copy.
        """
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise PreconditionError(f"Unknown setting(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_env(cls, environ=None):
        """
        Builds settings from the defaults plus the `CSF_TOL` environment variable.

        Args:
            environ (Mapping[str, str], optional): Environment to read; defaults to os.environ.

        Returns:
            Settings: Defaults, with `rel_tol` replaced when `CSF_TOL` is set.
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(ENV_TOLERANCE)
        if raw is None or raw.strip() == "":
            return cls()
        try:
            rel_tol = float(raw)
        except ValueError as exc:
            raise PreconditionError(f"{ENV_TOLERANCE} must be a number, got {raw!r}") from exc
        logger.debug("Relative tolerance overridden from %s: %g", ENV_TOLERANCE, rel_tol)
        return cls(rel_tol=rel_tol)


DEFAULT_SETTINGS = Settings()
