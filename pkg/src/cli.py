"""
This module implements the command line of the toolkit.

Subcommands:
- `shrink2d`     planar shrinker from alpha(0), alpha'(0); CSV and SVG output.
- `expand2d`     planar expander; CSV and SVG output.
- `alpha-plot`   alpha(t) of either kind as SVG (and optionally CSV).
- `shrink3d`     direct integration in R^3 with plane fit and spherical residuals.
- `planarity`    planarity report (JSON) of a curve CSV.
- `closure-scan` closure reports on a grid of alpha(0) values.
- `evolve`       polygonal curve shortening flow of a curve CSV.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures.
The environment variable `CSF_TOL` overrides the default relative tolerance.
"""

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

import translations
from errors import DomainError, NumericalError, PreconditionError
from exporter import (
    closure_reports_to_frame,
    export_table,
    planarity_report_to_json,
    read_curve_csv,
    read_polygon_csv,
    run_to_frame,
    write_curve_csv,
    write_manifest,
    write_snapshot_csv,
)
from expander import expander_curve, expander_residual, reconstruct_expander, solve_alpha_expander
from flow import evolve, homothety_check, rescaled_flow_area, resample_uniform
from geometry import arc_length_defect, fit_plane
from plotting import plot_alpha_svg, plot_curve_svg, plot_projections_svg, plot_snapshots_svg
from polar import solve_alpha
from settings import Settings
from shrinker import (
    closure_scan,
    find_period,
    reconstruct_shrinker,
    rotation_monotone,
    shrinker_residual,
    solve_alpha_shrinker,
)
from soliton import SolitonSpec, integrate_soliton, plane_confinement, spherical_residuals, verify_planarity
from translations import translate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _vector(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if len(values) < 2 or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected at least two finite numbers, got {text!r}")
    return np.array(values)


def _positive_float(text):
    value = float(text)
    if not value > 0.0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _orientation(text):
    value = int(text)
    if value not in (1, -1):
        raise argparse.ArgumentTypeError(f"orientation must be +1 or -1, got {text!r}")
    return value


def _times(text):
    return sorted(_positive_float(v) for v in text.split(","))


def build_parser():
    parser = argparse.ArgumentParser(prog="csf", description=translate("description"))
    parser.add_argument("--lang", choices=translations.LANGUAGES, default="en", help="Message language")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    parser.add_argument("--rel-tol", type=_positive_float, help="Relative integration tolerance")
    parser.add_argument("--abs-tol", type=_positive_float, help="Absolute integration tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shrink2d", help="Planar self-shrinker from alpha(0), alpha'(0)")
    p.add_argument("--alpha0", type=_positive_float, required=True)
    p.add_argument("--dalpha0", type=float, default=0.0)
    p.add_argument("--periods", type=_positive_int, default=1, help="Number of alpha periods to draw")
    p.add_argument("--span", type=_positive_float, help="Parameter span, overrides --periods")
    p.add_argument("--orientation", type=_orientation, default=1)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--samples", type=_positive_int, default=2049)
    p.add_argument("--csv")
    p.add_argument("--svg")

    p = sub.add_parser("expand2d", help="Planar self-expander from alpha(0), alpha'(0)")
    p.add_argument("--alpha0", type=_positive_float, required=True)
    p.add_argument("--dalpha0", type=float, default=0.0)
    p.add_argument("--span", type=_positive_float, default=5.0)
    p.add_argument("--orientation", type=_orientation, default=1)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--samples", type=_positive_int, default=2049)
    p.add_argument("--csv")
    p.add_argument("--svg")

    p = sub.add_parser("alpha-plot", help="Plot alpha(t)")
    p.add_argument("--kind", choices=("shrinker", "expander"), required=True)
    p.add_argument("--alpha0", type=_positive_float, required=True)
    p.add_argument("--dalpha0", type=float, default=0.0)
    p.add_argument("--span", type=float, required=True)
    p.add_argument("--samples", type=_positive_int, default=2001)
    p.add_argument("--svg", required=True)
    p.add_argument("--csv")

    p = sub.add_parser("shrink3d", help="Self-similar curve in R^n by direct integration")
    p.add_argument("--p0", type=_vector, required=True)
    p.add_argument("--v0", type=_vector, required=True, help="Initial tangent, normalised to unit length")
    p.add_argument("--span", type=float, required=True)
    p.add_argument("--kind", choices=("shrinker", "expander"), default="shrinker")
    p.add_argument("--samples", type=_positive_int, default=2001)
    p.add_argument("--csv")
    p.add_argument("--svg")

    p = sub.add_parser("planarity", help="Planarity report of a curve CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=("shrinker", "expander"), required=True)

    p = sub.add_parser("closure-scan", help="Closure reports on a grid of alpha(0)")
    p.add_argument("--from", dest="lo", type=float, required=True)
    p.add_argument("--to", dest="hi", type=float, required=True)
    p.add_argument("--grid", type=_positive_int, default=50)
    p.add_argument("--qmax", type=_positive_int, default=10)
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--csv", required=True, help="Output table (.csv, .xlsx or .pdf)")

    p = sub.add_parser("evolve", help="Curve shortening flow of a polygon")
    p.add_argument("--input", required=True)
    p.add_argument("--tend", type=_positive_float, required=True)
    p.add_argument("--vertices", type=_positive_int, help="Resample the input to this many vertices")
    p.add_argument("--dt-max", type=_positive_float, default=1e-3)
    p.add_argument("--snapshots", type=_times, help="Comma-separated snapshot times")
    p.add_argument("--open", action="store_true", help="Treat the input as an open curve")
    p.add_argument("--no-resample", action="store_true")
    p.add_argument("--rescale-homothety", action="store_true")
    p.add_argument("--outdir", required=True)
    return parser


def _emit(key, **kwargs):
    print(translate(key, **kwargs))


def _write_planar_outputs(args, curve, title):
    if args.csv:
        _emit("wrote_file", path=write_curve_csv(curve, args.csv))
    if args.svg:
        _emit("wrote_file", path=plot_curve_svg(curve, args.svg, title))


def _report_planar(kind, args, curve, residual, period=None):
    samples = getattr(curve, "samples", curve)
    radii = np.linalg.norm(samples.positions, axis=1)
    _emit(
        "planar_summary", kind=kind, alpha0=args.alpha0, dalpha0=args.dalpha0,
        samples=len(samples), t0=samples.params[0], t1=samples.params[-1],
    )
    _emit("period_line", period=translate("none") if period is None else f"{period:.15g}")
    _emit("residual_line", max=residual.max_residual, rms=residual.rms_residual)
    _emit("unit_speed_line", defect=arc_length_defect(samples))
    _emit("radius_line", min=radii.min(), max=radii.max())


def cmd_shrink2d(args, settings):
    circle = args.alpha0 == 1.0 and args.dalpha0 == 0.0
    period = None
    if args.span is not None:
        span = args.span
    elif circle:
        span = 2.0 * math.pi * args.periods
    else:
        _, period = find_period(args.alpha0, args.dalpha0, settings)
        span = period * args.periods
    alpha = solve_alpha_shrinker(args.alpha0, args.dalpha0, span, settings)
    curve = reconstruct_shrinker(alpha, args.theta0, args.orientation, args.samples, settings)
    _report_planar("shrinker", args, curve, shrinker_residual(curve), period or alpha.period)
    _write_planar_outputs(args, curve, f"shrinker, alpha(0) = {args.alpha0:g}")


def cmd_expand2d(args, settings):
    if args.dalpha0 == 0.0:
        curve = expander_curve(args.alpha0, args.span, args.theta0, args.orientation, args.samples, settings)
    else:
        alpha = solve_alpha_expander(args.alpha0, args.dalpha0, args.span, settings)
        curve = reconstruct_expander(alpha, args.theta0, args.orientation, args.samples, settings)
    _report_planar("expander", args, curve, expander_residual(curve))
    _write_planar_outputs(args, curve, f"expander, alpha(0) = {args.alpha0:g}")


def cmd_alpha_plot(args, settings):
    alpha = solve_alpha(args.kind, args.alpha0, args.dalpha0, args.span, settings)
    lo, hi = alpha.span
    t = np.linspace(lo, hi, args.samples)
    values = alpha.alpha(t)
    _emit("alpha_line", t0=lo, t1=hi, min=alpha.min_alpha(), max=values.max())
    _emit("period_line", period=translate("none") if alpha.period is None else f"{alpha.period:.15g}")
    if args.csv:
        frame = pd.DataFrame({"t": t, "alpha": values, "dalpha": alpha.dalpha(t)})
        _emit("wrote_file", path=export_table(frame, args.csv))
    _emit("wrote_file", path=plot_alpha_svg(t, values, args.svg, f"{args.kind}, alpha(0) = {args.alpha0:g}"))


def cmd_shrink3d(args, settings):
    v0 = args.v0
    norm = float(np.linalg.norm(v0))
    if norm == 0.0:
        raise PreconditionError("v0 must be non-zero")
    if abs(norm - 1.0) > settings.unit_tol:
        _emit("v0_normalised", norm=norm)
        v0 = v0 / norm
    spec = SolitonSpec(args.kind, args.p0, v0, args.span, settings)
    curve = integrate_soliton(spec, args.samples)
    plane = fit_plane(curve)
    _emit("soliton_line", kind=args.kind, dimension=spec.dimension, t0=curve.params[0], t1=curve.params[-1])
    _emit(
        "plane_line", max=plane.max_residual, rms=plane.rms_residual,
        span=plane_confinement(curve, spec.p0, spec.v0),
    )
    _emit("drift_line", drift=verify_planarity(curve, args.kind, settings).v_drift)
    if spec.dimension == 3:
        try:
            res = spherical_residuals(curve, args.kind, settings)
            _emit(
                "spherical_line", radial=res.res_radial, theta=res.res_theta,
                phi=res.res_phi, speed=res.res_speed, skipped=res.skipped,
            )
        except DomainError as exc:
            _emit("spherical_unavailable", message=str(exc))
    if args.csv:
        _emit("wrote_file", path=write_curve_csv(curve, args.csv))
    if args.svg:
        if spec.dimension == 3:
            path = plot_projections_svg(curve, args.svg, f"{args.kind} in R^3")
        else:
            path = plot_curve_svg(curve.positions[:, :2], args.svg, f"{args.kind}")
        _emit("wrote_file", path=path)


def cmd_planarity(args, settings):
    curve = read_curve_csv(args.input)
    report = verify_planarity(curve, args.kind, settings)
    print(planarity_report_to_json(report, curve.params))


def cmd_closure_scan(args, settings):
    reports = closure_scan((args.lo, args.hi), args.grid, args.qmax, settings, args.workers)
    ratios = [r.rotation_ratio for r in reports if r.rotation_ratio is not None]
    _emit(
        "scan_summary", count=len(reports), closed=sum(r.closed for r in reports),
        failed=sum(r.failed for r in reports),
    )
    if ratios:
        _emit("scan_range", lo=min(ratios), hi=max(ratios))
    _emit("scan_monotone", monotone=translate("yes" if rotation_monotone(reports) else "no"))
    _emit("wrote_file", path=export_table(closure_reports_to_frame(reports), args.csv, "Closure scan"))


def cmd_evolve(args, settings):
    polygon = read_polygon_csv(args.input, closed=False if args.open else None)
    if args.vertices:
        polygon = resample_uniform(polygon, args.vertices)
    snapshots = args.snapshots or [args.tend * k / 4.0 for k in range(1, 4)]
    snapshots = [t for t in snapshots if t < args.tend]
    run = evolve(
        polygon, args.tend, args.dt_max, resample=False if args.no_resample else None,
        snapshot_times=snapshots, settings=settings,
    )

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for k, (_, snapshot) in enumerate(run.snapshots):
        name = f"snapshot_{k:03d}.csv"
        write_snapshot_csv(snapshot, outdir / name)
        names.append(name)

    rescaled = None
    if args.rescale_homothety:
        rescaled = rescaled_flow_area(run)
        first, last = rescaled[0][1], rescaled[-1][1]
        _emit("rescaled_area_line", first=first, last=last, change=abs(last - first) / abs(first))
        for t, distance in homothety_check(run):
            _emit("homothety_line", t=t, distance=distance)
    export_table(run_to_frame(run, rescaled), outdir / "steps.csv")
    _emit("wrote_file", path=write_manifest(run, outdir / "manifest.json", names, rescaled))
    if polygon.dimension == 2:
        _emit("wrote_file", path=plot_snapshots_svg(run, outdir / "snapshots.svg"))
    _emit(
        "flow_summary", status=run.status, t=run.step_times[-1], steps=len(run.step_times) - 1,
        length0=run.lengths[0], length1=run.lengths[-1],
    )
    run.raise_for_status()


COMMANDS = {
    "shrink2d": cmd_shrink2d,
    "expand2d": cmd_expand2d,
    "alpha-plot": cmd_alpha_plot,
    "shrink3d": cmd_shrink3d,
    "planarity": cmd_planarity,
    "closure-scan": cmd_closure_scan,
    "evolve": cmd_evolve,
}


def run(argv=None):
    """
    Parses the arguments, runs one subcommand and returns the exit code.

    Args:
        argv (list[str], optional): Arguments without the program name; defaults to sys.argv[1:].

    Returns:
        int: 0 on success, 2 for invalid input, 3 for numerical failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT

    translations.set_language(args.lang)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = Settings.from_env().with_overrides(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
        COMMANDS[args.command](args, settings)
    except PreconditionError as exc:
        print(translate("input_error", message=exc), file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(translate("numerical_error", command=args.command, message=exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(translate("input_error", message=exc), file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK
