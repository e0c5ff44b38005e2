"""
Planar self-expanders, gamma'' = gamma - <gamma, gamma'> gamma', through the alpha reduction.

The expander alpha equation alpha'' + (alpha')^2 / 2 - 2 alpha = 2 has no positive
equilibrium; from alpha'(0) = 0 the trajectory has its minimum at t = 0 and grows without
bound on both sides, so the curves are unbounded and approach straight lines. The
angle rate is evaluated from (4 alpha0 - alpha'(0)^2) exp(alpha0 - alpha), which stays accurate
long after 4 alpha and alpha'^2 agree to every stored digit. Lines through the origin are
the degenerate expanders and are handled by `geometry.LineSoliton`.
"""

import logging

import numpy as np

from geometry import LineSoliton
from polar import reconstruct, soliton_residual, solve_alpha, two_sided_curve
from settings import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

KIND = "expander"

__all__ = [
    "LineSoliton",
    "asymptotic_tangent_drift",
    "expander_curve",
    "expander_residual",
    "growth_factor",
    "reconstruct_expander",
    "solve_alpha_expander",
]


def solve_alpha_expander(alpha0, dalpha0=0.0, t_span=5.0, settings=DEFAULT_SETTINGS):
    """
    Integrates alpha'' = -(alpha')^2 / 2 + 2 alpha + 2 from (alpha0, dalpha0).

    Args:
        alpha0 (float): alpha(0) > 0.
        dalpha0 (float): alpha'(0). Non-zero values may drive alpha to zero, which raises
                         PositivityError with the crossing time.
        t_span (float): End time, negative for backward integration.
        settings (Settings): Tolerances.

    Returns:
        AlphaSolution: The trajectory (never periodic).
    """
    return solve_alpha(KIND, alpha0, dalpha0, t_span, settings)


def reconstruct_expander(alpha, theta0=0.0, orientation=1, n_samples=512, settings=DEFAULT_SETTINGS):
    """
    Samples the expander sqrt(alpha) (cos theta, sin theta).

    Raises ReconstructionDomainError where 1 - u'^2 drops below -reconstruction_clamp.
    """
    return reconstruct(KIND, alpha, theta0, orientation, n_samples, settings)


def expander_residual(curve):
    """Per-sample | gamma'' - (gamma - <gamma, gamma'> gamma') | over a unit-speed curve."""
    return soliton_residual(curve, KIND)


def expander_curve(alpha0, span=5.0, theta0=0.0, orientation=1, n_samples=1025, settings=DEFAULT_SETTINGS):
    """Expander with alpha'(0) = 0 sampled on [-span, span]."""
    curve = two_sided_curve(KIND, alpha0, 0.0, span, theta0, orientation, n_samples, settings)
    logger.debug("Expander alpha0 = %g on [-%g, %g]: %d samples", alpha0, span, span, len(curve))
    return curve


def growth_factor(alpha):
    """sqrt(alpha) at the far end of the span divided by sqrt(alpha0)."""
    return float(np.sqrt(alpha.alpha(alpha.t_final) / alpha.alpha0))


def asymptotic_tangent_drift(curve, tail=0.1):
    """
    Angle (radians) the unit tangent still turns over the last `tail` fraction of samples at
    each end, as (start, end). Small values indicate the curve has straightened out.
    """
    k = max(2, int(round(tail * len(curve))))
    d1 = curve.d1 / np.linalg.norm(curve.d1, axis=1)[:, None]

    def turn(a, b):
        return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))

    return turn(d1[0], d1[k - 1]), turn(d1[-k], d1[-1])
