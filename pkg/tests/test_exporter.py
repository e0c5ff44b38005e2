import json

import numpy as np
import pandas as pd
import pytest

from errors import PreconditionError
from exporter import (
    CLOSURE_COLUMNS,
    closure_reports_to_frame,
    coordinate_names,
    curve_columns,
    export_table,
    is_export_available,
    planarity_report_to_json,
    read_curve_csv,
    read_polygon_csv,
    run_to_frame,
    write_curve_csv,
    write_manifest,
    write_snapshot_csv,
)
from flow import circle_polygon, evolve, rescaled_flow_area
from shrinker import closure_report
from soliton import verify_planarity


def test_coordinate_names():
    assert coordinate_names(2) == ["x", "y"]
    assert coordinate_names(5) == ["x", "y", "z", "x4", "x5"]
    assert curve_columns(2) == ["t", "x", "y", "dx", "dy", "ddx", "ddy"]


def test_curve_csv_is_exact(tmp_path, unit_circle):
    path = write_curve_csv(unit_circle, tmp_path / "circle.csv")
    assert path.read_text().splitlines()[0] == "t,x,y,dx,dy,ddx,ddy"
    loaded = read_curve_csv(path)
    for name in ("params", "positions", "d1", "d2"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(unit_circle, name))


def test_curve_csv_in_space(tmp_path, helix):
    path = write_curve_csv(helix, tmp_path / "nested" / "helix.csv")
    assert path.read_text().splitlines()[0] == "t,x,y,z,dx,dy,dz,ddx,ddy,ddz"
    np.testing.assert_array_equal(read_curve_csv(path).positions, helix.positions)


def test_repeated_writes_are_identical(tmp_path, unit_circle):
    first = write_curve_csv(unit_circle, tmp_path / "a.csv").read_bytes()
    second = write_curve_csv(unit_circle, tmp_path / "b.csv").read_bytes()
    assert first == second


def test_reading_bad_files(tmp_path):
    with pytest.raises(PreconditionError, match="not found"):
        read_curve_csv(tmp_path / "missing.csv")
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    with pytest.raises(PreconditionError):
        read_curve_csv(wrong)
    with pytest.raises(PreconditionError):
        read_polygon_csv(wrong)
    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text("t,y,x,dx,dy,ddx,ddy\n0,1,0,0,1,-1,0\n1,0,1,1,0,0,-1\n")
    with pytest.raises(PreconditionError):
        read_curve_csv(shuffled)


def test_read_polygon_from_curve_and_snapshot(tmp_path, unit_circle):
    polygon = read_polygon_csv(write_curve_csv(unit_circle, tmp_path / "circle.csv"))
    assert polygon.closed and len(polygon) == len(unit_circle) - 1

    square = circle_polygon(4)
    path = write_snapshot_csv(square, tmp_path / "square.csv")
    assert path.read_text().splitlines()[0] == "x,y"
    loaded = read_polygon_csv(path)
    assert loaded.closed
    np.testing.assert_array_equal(loaded.vertices, square.vertices)
    assert not read_polygon_csv(path, closed=False).closed


def test_closure_frame(tmp_path):
    reports = [closure_report(0.6), closure_report(1.0)]
    df = closure_reports_to_frame(reports)
    assert list(df.columns) == CLOSURE_COLUMNS
    assert df["alpha0"].tolist() == [0.6, 1.0]
    assert df["closed"].tolist() == [reports[0].closed, True]
    assert np.isnan(df.loc[1, "period"])

    path = export_table(df, tmp_path / "scan.csv")
    assert path.read_text().splitlines()[0] == ",".join(CLOSURE_COLUMNS)


def test_export_table_rejects_unknown_suffix(tmp_path):
    with pytest.raises(PreconditionError, match="Unsupported"):
        export_table(pd.DataFrame({"a": [1.0]}), tmp_path / "table.txt")
    assert is_export_available("csv")
    assert not is_export_available("docx")


def test_export_excel(tmp_path):
    pytest.importorskip("openpyxl")
    df = pd.DataFrame({"alpha0": [0.25, 0.5], "closed": [False, True]})
    path = export_table(df, tmp_path / "scan.xlsx")
    pd.testing.assert_frame_equal(pd.read_excel(path), df)


def test_export_pdf(tmp_path):
    pytest.importorskip("reportlab")
    df = pd.DataFrame({"alpha0": [0.25, 0.5], "rotation_ratio": [0.6, 0.65]})
    path = export_table(df, tmp_path / "scan.pdf", "Closure scan")
    assert path.read_bytes().startswith(b"%PDF")


def test_manifest(tmp_path):
    run = evolve(circle_polygon(32), 0.01, snapshot_times=[0.005])
    rescaled = rescaled_flow_area(run)
    path = write_manifest(run, tmp_path / "manifest.json", ["s0.csv", "s1.csv", "s2.csv"], rescaled)
    manifest = json.loads(path.read_text())
    assert manifest["status"] == "completed"
    assert [s["time"] for s in manifest["snapshots"]] == [0.0, 0.005, 0.01]
    assert [s["file"] for s in manifest["snapshots"]] == ["s0.csv", "s1.csv", "s2.csv"]
    assert len(manifest["steps"]["length"]) == len(run.step_times)
    assert len(manifest["rescaled_area"]) == len(run.step_times)

    table = run_to_frame(run, rescaled)
    assert list(table.columns) == ["time", "length", "area", "rescaled_area"]


def test_planarity_json(unit_circle):
    report = verify_planarity(unit_circle, "shrinker")
    payload = json.loads(planarity_report_to_json(report, unit_circle.params))
    assert set(payload) == {"rs_solutions", "v_drift", "plane", "spanned_by_initial", "degenerate"}
    assert len(payload["rs_solutions"]) == 2
    assert len(payload["rs_solutions"][0]["t"]) == len(unit_circle)
    assert payload["degenerate"] is False
    assert payload["v_drift"] == report.v_drift
