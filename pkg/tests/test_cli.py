import csv
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from blackstart import cli
from blackstart.sim import default_scenario

FAST = {"profile": "spiral", "filter": None, "t_end_s": 0.0834}


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _simulate(tmp_path, doc, name="out", extra=()):
    out = tmp_path / name
    code = cli.main(["simulate", "--scenario", _write(tmp_path / f"{name}.json", doc), "--out", str(out), *extra])
    return code, out


def test_simulate_writes_three_files(tmp_path):
    code, out = _simulate(tmp_path, FAST)
    assert code == 0
    assert sorted(os.listdir(out)) == ["metrics.json", "trajectory.csv", "waveforms.csv"]
    with open(out / "waveforms.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == ["t_s", "v_inv_a", "v_inv_b", "v_inv_c", "v_pcc_a", "v_pcc_b", "v_pcc_c",
                      "i_inv_a", "i_inv_b", "i_inv_c", "i_pcc_a", "i_pcc_b", "i_pcc_c",
                      "lambda_a", "lambda_b", "lambda_c", "lambda_alpha", "lambda_beta"]
    assert (out / "trajectory.csv").read_text().splitlines()[0] == "t_s,lambda_alpha,lambda_beta"


def test_csv_is_lf_and_round_trips(tmp_path):
    _, out = _simulate(tmp_path, FAST)
    raw = (out / "trajectory.csv").read_bytes()
    assert b"\r" not in raw
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    for line, row in zip(raw.decode().splitlines()[1:50], data):
        for text, value in zip(line.split(","), row):
            assert float(text) == value
            assert float("%.17g" % value) == value


def test_metrics_json_contents(tmp_path):
    _, out = _simulate(tmp_path, FAST)
    doc = json.loads((out / "metrics.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["tool"] == "blackstart"
    assert set(doc["metrics"]) >= {"peak_i_pcc_pu", "peak_i_inv_pu", "flux_dc_offset_wb",
                                   "startup_time_s", "method"}
    assert doc["metrics"]["method"] == "spiral"
    assert abs(doc["metrics"]["startup_time_s"] - 1 / 60) <= 1e-6
    assert doc["scenario"]["filter"] is None
    assert list(doc) == sorted(doc)


def test_reruns_are_byte_identical(tmp_path):
    _, a = _simulate(tmp_path, FAST, "a")
    _, b = _simulate(tmp_path, FAST, "b")
    for name in ("waveforms.csv", "trajectory.csv", "metrics.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_no_filter_flag(tmp_path):
    doc = dict(FAST)
    del doc["filter"]
    _, out = _simulate(tmp_path, doc, extra=["--no-filter"])
    assert json.loads((out / "metrics.json").read_text())["scenario"]["filter"] is None


def test_ultrafast_trajectory_geometry(tmp_path, lam0):
    _, out = _simulate(tmp_path, {"profile": "ultrafast", "filter": None, "t_end_s": 0.0834,
                                  "core": {"r_wind": 0.0, "r_core": 1e12}})
    t, a, b = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1).T
    t_d = 1 / (2 * math.pi * 60)
    ramp = t <= t_d
    assert np.max(np.abs(b[ramp])) < 1e-3 * lam0
    assert abs(a[ramp][-1] - lam0) < 1e-3 * lam0
    assert np.max(np.abs(np.hypot(a[~ramp], b[~ramp]) - lam0)) < 5e-3 * lam0


@pytest.mark.parametrize("text", ['{"profile": ', '{"profile": "gentle"}', '{"unknown": 1}'])
def test_bad_scenario_exits_2_without_output(tmp_path, text, capsys):
    path = tmp_path / "bad.json"
    path.write_text(text)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--scenario", str(path), "--out", str(out)]) == 2
    assert not out.exists()
    assert "blackstart:" in capsys.readouterr().err


def test_missing_scenario_file_exits_2(tmp_path):
    assert cli.main(["simulate", "--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 2


def test_divergence_exits_3(tmp_path):
    doc = {"profile": "hard", "filter": None, "dt_s": 1e-4, "core": {"r_wind": 1e9}}
    code, out = _simulate(tmp_path, doc)
    assert code == 3
    assert not out.exists()


def test_sweep_rejects_single_point(tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["sweep-residual", "--profile", "hard", "--points", "1", "--out", str(tmp_path)])
    assert e.value.code == 2


def test_sweep_hard(tmp_path, core):
    out = tmp_path / "sweep"
    assert cli.main(["sweep-residual", "--profile", "hard", "--points", "4", "--out", str(out),
                     "--no-filter"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "residual_wb,peak_i_pcc_pu,flux_offset_wb"
    data = np.loadtxt(out / "sweep.csv", delimiter=",", skiprows=1)
    assert data[0, 0] == 0.0
    assert math.isclose(data[-1, 0], core.lambda_knee)
    assert np.all(np.diff(data[:, 1]) >= 0.0)

    # the zero-residual point is the plain simulate run
    code, sim_out = _simulate(tmp_path, {"profile": "hard", "filter": None}, "plain")
    assert code == 0
    m = json.loads((sim_out / "metrics.json").read_text())["metrics"]
    assert data[0, 1] == m["peak_i_pcc_pu"]
    assert data[0, 2] == m["flux_dc_offset_wb"]


def test_demag_suite_small(tmp_path, lam0):
    out = tmp_path / "suite"
    assert cli.main(["demag-suite", "--seed", "3", "--count", "2", "--out", str(out), "--no-filter"]) == 0
    data = np.loadtxt(out / "demag_suite.csv", delimiter=",", skiprows=1)
    assert data.shape == (2, 6)
    assert np.all(data[:, 2] < 0.05 * lam0)


def test_compare_subset(tmp_path, monkeypatch):
    from blackstart import comparison

    picked = [c for c in comparison.cases() if c.method != "hard" and c.residual == "none"]
    real = comparison.run_matrix
    monkeypatch.setattr(comparison, "run_matrix", lambda: real(picked))
    out = tmp_path / "cmp"
    assert cli.main(["compare", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "comparison.csv", newline="")))
    assert len(rows) == 4
    assert list(rows[0]) == cli.COMPARISON_HEADER
    assert "| Criterion |" in (out / "summary.md").read_text()


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "blackstart.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("blackstart ")


def test_preset_equals_library_default():
    from blackstart.scenario_io import load
    from importlib import resources
    path = resources.files("blackstart").joinpath("presets", "default.json")
    assert load(str(path)) == default_scenario("spiral", True)
