import json

import numpy as np
import pandas as pd
import pytest

import cli
from exporter import read_curve_csv


@pytest.fixture
def circle_csv(tmp_path):
    path = tmp_path / "circle.csv"
    assert cli.run(["shrink2d", "--alpha0", "1", "--samples", "257", "--csv", str(path)]) == cli.EXIT_OK
    return path


def test_help_and_usage_errors(capsys):
    assert cli.run(["--help"]) == cli.EXIT_OK
    assert cli.run([]) == cli.EXIT_INPUT
    assert cli.run(["shrink2d"]) == cli.EXIT_INPUT
    assert cli.run(["shrink2d", "--alpha0", "-1"]) == cli.EXIT_INPUT
    assert cli.run(["shrink2d", "--alpha0", "1", "--orientation", "2"]) == cli.EXIT_INPUT
    assert cli.run(["shrink3d", "--p0", "1", "--v0", "0,1", "--span", "1"]) == cli.EXIT_INPUT
    capsys.readouterr()


def test_shrink2d_circle(tmp_path, circle_csv):
    curve = read_curve_csv(circle_csv)
    assert len(curve) == 257
    assert curve.params[-1] == pytest.approx(2.0 * np.pi)
    np.testing.assert_allclose(np.linalg.norm(curve.positions, axis=1), 1.0, atol=1e-9)

    again = tmp_path / "again.csv"
    cli.run(["shrink2d", "--alpha0", "1", "--samples", "257", "--csv", str(again)])
    assert again.read_bytes() == circle_csv.read_bytes()


def test_shrink2d_with_figure(tmp_path, capsys):
    svg = tmp_path / "shrinker.svg"
    code = cli.run(["shrink2d", "--alpha0", "0.6", "--periods", "2", "--samples", "513", "--svg", str(svg)])
    assert code == cli.EXIT_OK
    assert svg.exists()
    out = capsys.readouterr().out
    assert f"Wrote {svg}" in out
    assert "alpha period: none" not in out


def test_numerical_failure_exit_code(capsys):
    code = cli.run(["shrink2d", "--alpha0", "0.5", "--dalpha0", "-3", "--span", "2"])
    assert code == cli.EXIT_NUMERICAL
    assert "Numerical failure in shrink2d" in capsys.readouterr().err


def test_circle_has_no_period(capsys):
    assert cli.run(["shrink2d", "--alpha0", "1", "--samples", "65"]) == cli.EXIT_OK
    assert "alpha period: none" in capsys.readouterr().out


def test_german_messages(capsys):
    assert cli.run(["--lang", "de", "shrink2d", "--alpha0", "1", "--samples", "65"]) == cli.EXIT_OK
    assert "Stützstellen" in capsys.readouterr().out


def test_invalid_environment_tolerance(monkeypatch, capsys):
    monkeypatch.setenv("CSF_TOL", "tight")
    assert cli.run(["shrink2d", "--alpha0", "1", "--samples", "65"]) == cli.EXIT_INPUT
    assert "CSF_TOL" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    code = cli.run(["planarity", "--input", str(tmp_path / "missing.csv"), "--kind", "shrinker"])
    assert code == cli.EXIT_INPUT
    assert "Input error" in capsys.readouterr().err


def test_planarity_of_written_curve(circle_csv, capsys):
    capsys.readouterr()
    assert cli.run(["planarity", "--input", str(circle_csv), "--kind", "shrinker"]) == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["v_drift"] <= 1e-8
    assert payload["degenerate"] is False


def test_expand2d(tmp_path, capsys):
    path = tmp_path / "expander.csv"
    assert cli.run(["expand2d", "--alpha0", "1", "--samples", "401", "--csv", str(path)]) == cli.EXIT_OK
    curve = read_curve_csv(path)
    assert curve.params[0] == pytest.approx(-5.0) and curve.params[-1] == pytest.approx(5.0)
    capsys.readouterr()


def test_alpha_plot(tmp_path, capsys):
    svg, table = tmp_path / "alpha.svg", tmp_path / "alpha.csv"
    code = cli.run([
        "alpha-plot", "--kind", "expander", "--alpha0", "1", "--span", "2",
        "--samples", "101", "--svg", str(svg), "--csv", str(table),
    ])
    assert code == cli.EXIT_OK
    df = pd.read_csv(table)
    assert list(df.columns) == ["t", "alpha", "dalpha"]
    assert len(df) == 101 and df["alpha"].iloc[0] == 1.0
    assert svg.exists()
    capsys.readouterr()


def test_shrink3d_normalises_tangent(tmp_path, capsys):
    path = tmp_path / "equator.csv"
    code = cli.run(["shrink3d", "--p0", "1,0,0", "--v0", "0,2,0", "--span", "3", "--samples", "301",
                    "--csv", str(path)])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "v0 normalised to unit length" in out
    assert "spherical residuals" in out
    curve = read_curve_csv(path)
    np.testing.assert_allclose(curve.d1[0], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(curve.positions[:, 2], 0.0, atol=1e-12)


def test_closure_scan(tmp_path, capsys):
    table = tmp_path / "scan.csv"
    code = cli.run(["closure-scan", "--from", "0.5", "--to", "0.6", "--grid", "3", "--workers", "2",
                    "--csv", str(table)])
    assert code == cli.EXIT_OK
    df = pd.read_csv(table)
    assert df["alpha0"].tolist() == pytest.approx([0.5, 0.55, 0.6])
    assert "3 grid points" in capsys.readouterr().out
    assert cli.run(["closure-scan", "--from", "0.6", "--to", "0.5", "--csv", str(table)]) == cli.EXIT_INPUT


def test_evolve_writes_run(tmp_path, circle_csv, capsys):
    outdir = tmp_path / "run"
    code = cli.run(["evolve", "--input", str(circle_csv), "--tend", "0.05", "--vertices", "64",
                    "--rescale-homothety", "--outdir", str(outdir)])
    assert code == cli.EXIT_OK
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["status"] == "completed"
    assert [s["time"] for s in manifest["snapshots"]] == pytest.approx([0.0, 0.0125, 0.025, 0.0375, 0.05])
    assert sorted(p.name for p in outdir.glob("snapshot_*.csv")) == [f"snapshot_{k:03d}.csv" for k in range(5)]
    assert (outdir / "snapshots.svg").exists()
    steps = pd.read_csv(outdir / "steps.csv")
    assert list(steps.columns) == ["time", "length", "area", "rescaled_area"]
    assert "rescaled area" in capsys.readouterr().out


def test_evolve_to_extinction(tmp_path, circle_csv, capsys):
    code = cli.run(["evolve", "--input", str(circle_csv), "--tend", "0.6", "--vertices", "16",
                    "--outdir", str(tmp_path / "run")])
    assert code == cli.EXIT_OK
    assert "flow extinct" in capsys.readouterr().out


def test_expand2d_large_minimum_default_span(tmp_path, capsys):
    path = tmp_path / "wide.csv"
    assert cli.run(["expand2d", "--alpha0", "2", "--samples", "1025", "--csv", str(path)]) == cli.EXIT_OK
    curve = read_curve_csv(path)
    assert curve.params[-1] == pytest.approx(5.0)
    assert np.all(np.isfinite(curve.positions))
    capsys.readouterr()
