"""
SVG figures of curves, alpha trajectories and flow snapshots, drawn with matplotlib's Agg
backend. Every curve is a single line; the axes are fitted to the data bounding box with a
5% margin and an equal aspect ratio. Output is reproducible: the SVG id salt is fixed and no
date is embedded.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from geometry import fit_plane  # noqa: E402

logger = logging.getLogger(__name__)

MARGIN = 0.05
matplotlib.rcParams["svg.hashsalt"] = "csf-toolkit"
matplotlib.rcParams["svg.fonttype"] = "none"


def _limits(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = MARGIN * (hi - lo) if hi > lo else max(abs(lo), 1.0) * MARGIN
    return lo - pad, hi + pad


def _fit_axes(ax, points):
    ax.set_xlim(*_limits(points[:, 0]))
    ax.set_ylim(*_limits(points[:, 1]))
    ax.set_aspect("equal", adjustable="datalim")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Wrote figure %s", path)
    return path


def _positions(curve):
    curve = getattr(curve, "samples", curve)
    return np.asarray(getattr(curve, "positions", curve), dtype=float)


def plot_curve_svg(curve, path, title=None):
    """Planar curve (CurveSample, PolarShrinkCurve or (m, 2) array) as one polyline."""
    points = _positions(curve)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(points[:, 0], points[:, 1], color="black", linewidth=0.8)
    ax.plot([0.0], [0.0], marker="+", color="grey")
    _fit_axes(ax, points)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_alpha_svg(t, alpha, path, title=None):
    """alpha(t) against t."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, alpha, color="black", linewidth=0.8)
    ax.set_xlim(*_limits(np.asarray(t)))
    ax.set_ylim(*_limits(np.asarray(alpha)))
    ax.set_xlabel("t")
    ax.set_ylabel("alpha")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def principal_frame(points):
    """Rotation whose rows are the two principal directions of the points and their normal."""
    plane = fit_plane(points)
    normal = np.cross(plane.basis1, plane.basis2)
    return np.vstack([plane.basis1, plane.basis2, normal])


def plot_projections_svg(curve, path, title=None):
    """A space curve in R^3 seen from two sides: xy and xz after principal-axis alignment."""
    points = _positions(curve)
    aligned = (points - points.mean(axis=0)) @ principal_frame(points).T
    fig, axes = plt.subplots(1, 2, figsize=(10, 5))
    for ax, (i, j), label in zip(axes, ((0, 1), (0, 2)), ("xy", "xz")):
        view = aligned[:, [i, j]]
        ax.plot(view[:, 0], view[:, 1], color="black", linewidth=0.8)
        _fit_axes(ax, view)
        ax.set_title(label)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_snapshots_svg(run, path, title=None):
    """The polygons of a FlowRun, one closed line per snapshot."""
    fig, ax = plt.subplots(figsize=(6, 6))
    everything = []
    for t, polygon in run.snapshots:
        points = polygon.vertices[:, :2]
        if polygon.closed:
            points = np.vstack([points, points[:1]])
        ax.plot(points[:, 0], points[:, 1], linewidth=0.8, label=f"t = {t:.4g}")
        everything.append(points)
    _fit_axes(ax, np.vstack(everything))
    ax.legend(loc="upper right", fontsize="small")
    if title:
        ax.set_title(title)
    return _save(fig, path)
