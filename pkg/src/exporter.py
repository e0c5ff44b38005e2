"""
This module handles reading and writing the toolkit's data files.
Curves, closure scans and flow runs are exchanged as CSV with 17 significant digits; tables
can also be exported to Excel and PDF when the optional libraries are installed.

Key Features:
- Curve CSV with one row per sample: `t`, positions, first and second derivatives.
- Closure scan table `alpha0,period,delta_theta,rotation_ratio,closure_gap,closed`.
- Flow snapshots as vertex CSV files plus a JSON manifest of times, lengths, areas and status.
- Planarity reports as JSON with the report's field names.
- `export_table` dispatches on the file suffix (.csv, .xlsx, .pdf).

Usage:
- `write_curve_csv(curve, "shrinker.csv")`, then `read_curve_csv("shrinker.csv")`.
- `export_table(closure_reports_to_frame(reports), "scan.xlsx", "Closure scan")`.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

try:
    from reportlab.lib import colors
    from reportlab.lib.pagesizes import A4
    from reportlab.lib.styles import getSampleStyleSheet
    from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
    REPORTLAB_AVAILABLE = True
except ImportError:
    REPORTLAB_AVAILABLE = False

try:
    import openpyxl  # noqa: F401
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

from errors import PreconditionError
from geometry import CurveSample
from flow import PolyCurve, polygon_from_curve

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
CLOSURE_COLUMNS = ["alpha0", "period", "delta_theta", "rotation_ratio", "closure_gap", "closed"]
SUFFIX_TYPES = {".csv": "csv", ".xlsx": "excel", ".pdf": "pdf"}


def is_export_available(file_type=None):
    """Checks if the libraries needed for a file type ("csv", "excel", "pdf") are installed."""
    if file_type is None:
        return True
    if file_type == "csv":
        return True
    if file_type == "excel":
        return OPENPYXL_AVAILABLE
    if file_type == "pdf":
        return REPORTLAB_AVAILABLE
    return False


def coordinate_names(dimension):
    """x, y, z, x4, x5, ... for the given dimension."""
    names = ["x", "y", "z"][:dimension]
    return names + [f"x{k}" for k in range(4, dimension + 1)]


def curve_columns(dimension):
    names = coordinate_names(dimension)
    return ["t"] + names + [f"d{n}" for n in names] + [f"dd{n}" for n in names]


def curve_to_frame(curve):
    """DataFrame with one row per sample of a CurveSample (or anything carrying `samples`)."""
    curve = getattr(curve, "samples", curve)
    data = np.column_stack([curve.params, curve.positions, curve.d1, curve.d2])
    return pd.DataFrame(data, columns=curve_columns(curve.dimension))


def curve_from_frame(df):
    """Inverse of `curve_to_frame`; the column layout fixes the dimension."""
    columns = list(df.columns)
    if not columns or columns[0] != "t" or (len(columns) - 1) % 3 != 0:
        raise PreconditionError(f"Not a curve table: columns {columns}")
    dimension = (len(columns) - 1) // 3
    if dimension < 2 or columns != curve_columns(dimension):
        raise PreconditionError(f"Unexpected curve columns {columns}, expected {curve_columns(max(dimension, 2))}")
    values = df.to_numpy(dtype=float)
    n = dimension
    return CurveSample(values[:, 0], values[:, 1:1 + n], values[:, 1 + n:1 + 2 * n], values[:, 1 + 2 * n:])


def _write_csv(df, path):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(df), path)
    return path


def _read_csv(path):
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError:
        raise PreconditionError(f"File not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise PreconditionError(f"Cannot parse {path}: {exc}") from exc


def write_curve_csv(curve, path):
    return _write_csv(curve_to_frame(curve), path)


def read_curve_csv(path):
    return curve_from_frame(_read_csv(path))


def read_polygon_csv(path, closed=None):
    """
    Reads polygon vertices from a curve CSV or a snapshot CSV (position columns only).

    For curve files a repeated final point marks a closed curve and is dropped.
    """
    df = _read_csv(path)
    columns = list(df.columns)
    if columns and columns[0] == "t":
        return polygon_from_curve(curve_from_frame(df), closed=closed)
    if columns != coordinate_names(len(columns)) or len(columns) < 2:
        raise PreconditionError(f"Not a vertex table: columns {columns}")
    return PolyCurve(df.to_numpy(dtype=float), True if closed is None else closed)


def closure_reports_to_frame(reports):
    rows = [
        {
            "alpha0": r.alpha0,
            "period": r.period_T,
            "delta_theta": r.delta_theta,
            "rotation_ratio": r.rotation_ratio,
            "closure_gap": r.closure_gap,
            "closed": r.closed,
        }
        for r in reports
    ]
    return pd.DataFrame(rows, columns=CLOSURE_COLUMNS)


def write_snapshot_csv(polygon, path):
    df = pd.DataFrame(polygon.vertices, columns=coordinate_names(polygon.dimension))
    return _write_csv(df, path)


def run_to_frame(run, rescaled=None):
    """Per-step table of a FlowRun: time, length, area and optionally the rescaled area."""
    data = {"time": run.step_times, "length": run.lengths}
    if run.areas is not None:
        data["area"] = run.areas
    if rescaled is not None:
        data["rescaled_area"] = [a for _, a in rescaled]
    return pd.DataFrame(data)


def write_manifest(run, path, snapshot_files=(), rescaled=None):
    """
    Writes the JSON manifest of a flow run.

    Args:
        run (FlowRun): The run.
        path (str or Path): Target file.
        snapshot_files (Sequence[str]): File names of the snapshot CSVs, in snapshot order.
        rescaled (list, optional): (time, area) pairs from `rescaled_flow_area`.
    """
    manifest = {
        "status": run.status,
        "message": run.message,
        "snapshots": [
            {"time": float(t), "vertices": len(p), "file": name}
            for (t, p), name in zip(run.snapshots, list(snapshot_files) + [None] * len(run.snapshots))
        ],
        "steps": {
            "time": [float(t) for t in run.step_times],
            "length": [float(v) for v in run.lengths],
            "area": None if run.areas is None else [float(v) for v in run.areas],
        },
    }
    if rescaled is not None:
        manifest["rescaled_area"] = [{"time": t, "area": a} for t, a in rescaled]
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _plane_to_dict(plane):
    return {
        "basepoint": plane.basepoint.tolist(),
        "basis1": plane.basis1.tolist(),
        "basis2": plane.basis2.tolist(),
        "max_residual": plane.max_residual,
        "rms_residual": plane.rms_residual,
    }


def planarity_report_to_json(report, params=None):
    """
    JSON text of a PlanarityReport; `rs_solutions` lists the two (r, s) trajectories with the
    sample parameters when given.
    """
    trajectories = []
    for rs in report.rs_solutions:
        entry = {"r": rs[:, 0].tolist(), "s": rs[:, 1].tolist()}
        if params is not None:
            entry["t"] = np.asarray(params, dtype=float).tolist()
        trajectories.append(entry)
    payload = {
        "rs_solutions": trajectories,
        "v_drift": report.v_drift,
        "plane": _plane_to_dict(report.plane),
        "spanned_by_initial": report.spanned_by_initial,
        "degenerate": report.degenerate,
    }
    return json.dumps(payload, indent=2)


def _export_df_to_pdf(df, path, title):
    """Creates a PDF with a title and the table."""
    doc = SimpleDocTemplate(str(path), pagesize=A4, rightMargin=36, leftMargin=36, topMargin=48, bottomMargin=36)
    styles = getSampleStyleSheet()
    body = [list(df.columns)] + [
        [f"{v:.10g}" if isinstance(v, float) else str(v) for v in row] for row in df.itertuples(index=False)
    ]
    table = Table(body, repeatRows=1)
    table.setStyle(
        TableStyle(
            [
                ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
                ("FONTSIZE", (0, 0), (-1, -1), 7),
                ("BACKGROUND", (0, 0), (-1, 0), colors.lightgrey),
                ("GRID", (0, 0), (-1, -1), 0.25, colors.grey),
            ]
        )
    )
    doc.build([Paragraph(title, styles["h1"]), Spacer(1, 12), table])


def export_table(df, path, title=""):
    """
    Writes a table in the format given by the file suffix.

    Raises:
        PreconditionError: Unknown suffix or the library for it is not installed.
    """
    path = Path(path)
    file_type = SUFFIX_TYPES.get(path.suffix.lower())
    if file_type is None:
        raise PreconditionError(f"Unsupported table format {path.suffix!r}; use one of {sorted(SUFFIX_TYPES)}")
    if not is_export_available(file_type):
        library = "openpyxl" if file_type == "excel" else "reportlab"
        raise PreconditionError(f"{file_type} export requires the '{library}' library")
    if file_type == "csv":
        return _write_csv(df, path)
    if file_type == "excel":
        df.to_excel(path, index=False)
    else:
        _export_df_to_pdf(df, path, title or path.stem)
    logger.debug("Exported %d rows to %s", len(df), path)
    return path
