import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dtaoi.cli import COLUMNS, SEED_ENV, RunSpec, format_cell, run

GOLDEN = Path(__file__).parent / "golden"


def call(argv):
    out = io.StringIO()
    code = run(argv, stdout=out)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- golden files -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,argv",
    [
        ("analyze_fcfs.csv", ["analyze", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9", "--x-max", "20"]),
        ("analyze_lcfs.csv", ["analyze", "--model", "lcfs", "--lambda", "0.5", "--mu", "0.9", "--x-max", "10"]),
        ("approx_exp.csv", ["approx", "--f", "exp", "--alpha", "0.1", "--probe-t", "15", "--epsilon", "0.01"]),
        ("optimize_fcfs.csv", ["optimize", "--metric", "pcoud", "--model", "fcfs", "--mu", "0.9", "--f", "linear", "--alpha", "1"]),
        ("coud_bufferless.csv", ["coud", "--model", "bufferless", "--lambda", "0.5", "--p", "0.8", "--f", "power", "--n", "2"]),
    ],
)
def test_golden_output(name, argv):
    code, text = call(argv)
    assert code == 0
    assert text == (GOLDEN / name).read_text()


def test_column_schema_is_fixed():
    assert COLUMNS["analyze"] == ("x", "aoi_pmf", "paoi_pmf", "aoi_cdf", "paoi_cdf")
    assert COLUMNS["approx"] == ("k", "power", "weight", "approximation", "gap")
    for command, columns in COLUMNS.items():
        assert len(set(columns)) == len(columns), command


# --- documented examples ---------------------------------------------------------------------


def test_analyze_fifty_rows():
    code, text = call(["analyze", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9", "--x-max", "50", "--format", "csv"])
    assert code == 0
    table = rows(text)
    assert len(table) == 50
    assert float(table[1]["aoi_pmf"]) == 0.4 and table[1]["x"] == "2"


def test_optimize_peak_minimizer():
    code, text = call(["optimize", "--metric", "pcoud", "--model", "fcfs", "--mu", "0.9", "--f", "linear", "--alpha", "1"])
    assert code == 0
    assert float(rows(text)[0]["lambda_star"]) == pytest.approx(0.683772, abs=1e-6)


def test_coud_command_reports_both_metrics():
    code, text = call(["coud", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9"])
    table = rows(text)
    assert [r["metric"] for r in table] == ["coud", "pcoud"]
    assert float(table[0]["closed_form"]) == pytest.approx(3.188272, abs=1e-6)
    assert float(table[1]["numeric"]) == pytest.approx(3.25, rel=1e-9)
    code, text = call(["coud", "--model", "lcfs", "--lambda", "0.5", "--mu", "0.9", "--f", "log"])
    assert code == 0 and rows(text)[0]["closed_form"] == ""


def test_validate_passes_on_reference_case():
    code, text = call(["validate", "--model", "lcfs", "--lambda", "0.5", "--mu", "0.9", "--seed", "3"])
    assert code == 0
    assert {r["check"]: r["status"] for r in rows(text)} == {
        "aoi_tv": "PASS", "paoi_tv": "PASS", "aoi_mean_rel_err": "PASS", "theorem1_residual": "PASS",
    }


def test_validate_fails_on_tiny_run():
    code, text = call(["validate", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9", "--slots", "200"])
    assert code == 1
    assert "FAIL" in text


# --- exit codes and diagnostics ------------------------------------------------------------------


def test_unstable_queue_rejected(capsys):
    code, text = call(["analyze", "--model", "fcfs", "--lambda", "0.95", "--mu", "0.9"])
    assert code == 2 and text == ""
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "unstable" in err[0]


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--model", "lcfs", "--lambda", "0.5"],
        ["analyze", "--model", "bufferless", "--lambda", "0.5", "--p", "0.5", "--mu", "0.3"],
        ["analyze", "--lambda", "0.5", "--mu", "0.3"],
        ["coud", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9", "--f", "power", "--n", "0"],
        ["optimize", "--model", "fcfs", "--mu", "1.5"],
    ],
)
def test_invalid_input_exit_code(argv, capsys):
    assert call(argv)[0] == 2
    assert capsys.readouterr().err.startswith("error: ")


def test_divergence_exit_code(capsys):
    code, _ = call(["coud", "--model", "lcfs", "--lambda", "0.1", "--mu", "0.1", "--f", "exp", "--alpha", "1"])
    assert code == 3
    assert "diverges" in capsys.readouterr().err


def test_approx_nonconvergence_exit_code():
    code, _ = call(["approx", "--f", "exp", "--alpha", "1", "--probe-t", "40", "--epsilon", "1e-9", "--max-terms", "3"])
    assert code == 3


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run(["plot"])
    assert exc.value.code == 2


# --- configuration ------------------------------------------------------------------------------


def test_json_round_trip(tmp_path):
    argv = ["analyze", "--model", "lcfs", "--lambda", "0.3", "--mu", "0.6", "--x-max", "15", "--format", "json"]
    code, first = call(argv)
    assert code == 0
    doc = json.loads(first)
    assert doc["columns"] == list(COLUMNS["analyze"]) and len(doc["rows"]) == 15
    cfg = tmp_path / "run.json"
    cfg.write_text(first)
    code, second = call(["analyze", "--config", str(cfg)])
    assert code == 0 and second == first


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "fcfs", "lambda": 0.2, "mu": 0.5, "x_max": 5}))
    _, text = call(["analyze", "--config", str(cfg), "--x-max", "3"])
    assert len(rows(text)) == 3


def test_bad_config_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "fcfs", "colour": "red"}))
    assert call(["analyze", "--config", str(cfg)])[0] == 2
    assert call(["analyze", "--config", str(tmp_path / "missing.json")])[0] == 2


def test_seed_from_environment(monkeypatch):
    argv = ["simulate", "--model", "bufferless", "--lambda", "0.5", "--p", "0.5", "--slots", "5000"]
    monkeypatch.setenv(SEED_ENV, "17")
    _, env_seeded = call(argv)
    assert rows(env_seeded)[0]["seed"] == "17"
    _, flag_seeded = call(argv + ["--seed", "17"])
    assert env_seeded == flag_seeded
    _, other = call(argv + ["--seed", "18"])
    assert other != env_seeded


def test_out_file_and_trace(tmp_path):
    out, trace = tmp_path / "s.csv", tmp_path / "t.csv"
    code, text = call(["simulate", "--model", "fcfs", "--lambda", "0.5", "--mu", "0.9", "--slots", "3000",
                       "--out", str(out), "--trace", str(trace)])
    assert code == 0 and text == ""
    summary = rows(out.read_text())[0]
    trace_rows = rows(trace.read_text())
    assert list(trace_rows[0]) == ["n", "t_n", "t'_n", "T_n", "A_n"]
    assert len(trace_rows) == int(summary["deliveries"])


def test_simulate_byte_identical_across_processes():
    argv = [sys.executable, "-m", "dtaoi", "simulate", "--model", "lcfs", "--lambda", "0.5", "--mu", "0.9",
            "--slots", "200000", "--seed", "5"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and a.count(b"\n") == 2


def test_run_spec_coercion():
    spec = RunSpec(command="analyze", lam="0.5", x_max=7.0)
    assert spec.lam == 0.5 and spec.x_max == 7 and isinstance(spec.x_max, int)
    with pytest.raises(ValueError):
        RunSpec(command="analyze", x_max=2.5)
    assert spec.to_dict()["lambda"] == 0.5


def test_cell_formatting():
    assert format_cell(0.1 + 0.2) == "0.3"
    assert format_cell(1 / 3) == "0.333333333"
    assert format_cell(None) == ""
    assert format_cell(0.0) == "0"
    assert format_cell(12) == "12"
