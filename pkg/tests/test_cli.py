import csv
import json
import math
import subprocess
import sys

import pytest

from lefsolve.artifacts import dumps, fmt_float
from lefsolve.cli import DIAGNOSTIC_KEYS, main, run_command
from lefsolve.config import parse_config

from test_config import MINIMAL

ANNULUS = MINIMAL + '''
[annulus]
r_outer = 64
n_r = 65
n_theta = 16
'''


def run(tmp_path, text, command, name="run.ini", **kw):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / "out"
    status = main(["--config", str(cfg), "--command", command, "--out", str(out)]
                  + [f"--{k}={v}" for k, v in kw.items()])
    return status, out


def load(path):
    with open(path) as fh:
        return json.load(fh)


def test_check_command(tmp_path):
    status, out = run(tmp_path, MINIMAL, "check")
    assert status == 0
    doc = load(out / "check.json")
    for name in ("p", "q"):
        assert doc["integrals"][name]["value"] == pytest.approx(math.log(2) / 8 + 1 / 16, rel=1e-10)


def test_check_non_integrable(tmp_path):
    status, out = run(tmp_path, MINIMAL.replace('p = "r^-4"', 'p = "r^-2"'), "check")
    assert status == 3
    assert load(out / "error.json")["category"] == "NonIntegrable"


def test_check_non_radial_includes_majorants(tmp_path):
    status, out = run(tmp_path, MINIMAL.replace('"r^-4"', '"(2+cos(theta))/r^4"', 1), "check")
    assert status == 0
    doc = load(out / "check.json")["integrals"]
    assert doc["p"] == {"radial": False}
    assert doc["p_majorant"]["value"] == pytest.approx(3 * (math.log(2) / 8 + 1 / 16), rel=1e-10)


def test_threshold_command(tmp_path):
    status, out = run(tmp_path, MINIMAL, "threshold")
    assert status == 0
    diag = load(out / "threshold.json")["diagnostics"]
    assert diag["T"] == pytest.approx(math.log(2), abs=1e-9)
    assert diag["B_c"] == pytest.approx(2.0, abs=2e-9)
    assert list(diag) == list(DIAGNOSTIC_KEYS)


def test_config_error_exit_status(tmp_path):
    bad = MINIMAL.replace("alpha = 0.3", "alpha = 0.9")
    status, out = run(tmp_path, bad, "threshold")
    assert status == 2
    err = load(out / "error.json")
    assert err["category"] == "ConfigError" and "alpha+beta must be < 1" in err["message"]


def test_no_convergence_exit_status(tmp_path):
    status, out = run(tmp_path, MINIMAL + "[solver]\nmax_iter = 2\npicard_tol = 1e-14\n",
                      "solve-radial")
    assert status == 4
    assert load(out / "error.json")["category"] == "NoConvergence"


def test_solve_radial_outputs(tmp_path):
    status, out = run(tmp_path, MINIMAL + "[solver]\nn = 1025\n", "solve-radial")
    assert status == 0
    with open(out / "radial_solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "u", "v"] and len(rows) == 1026
    assert float(rows[1][0]) == pytest.approx(2.0)
    diag = load(out / "solve-radial.json")["diagnostics"]
    assert list(diag) == list(DIAGNOSTIC_KEYS)
    assert diag["M_measured"] <= 2.0 and diag["iterations"] >= 2
    assert diag["monotonicity_defect"] is None


def test_solve_annulus_outputs(tmp_path):
    status, out = run(tmp_path, ANNULUS, "solve-annulus")
    assert status == 0
    with open(out / "annulus_solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "theta", "u", "v"] and len(rows) == 65 * 16 + 1
    assert load(out / "solve-annulus.json")["diagnostics"]["monotonicity_defect"] >= -1e-10


def test_solve_annulus_needs_section(tmp_path):
    status, out = run(tmp_path, MINIMAL, "solve-annulus")
    assert status == 2


def test_verify_zero_problem(tmp_path):
    text = MINIMAL.replace('"r^-4"', '"0"')
    status, out = run(tmp_path, text, "verify")
    assert status == 0
    doc = load(out / "verify.json")
    assert all(ch["passed"] for ch in doc["checks"])
    assert doc["diagnostics"]["res_y"] == 0.0 and doc["diagnostics"]["res_z"] == 0.0


def test_verify_failure_exit_status(tmp_path):
    # an impossible residual tolerance makes the residual checks fail
    status, out = run(tmp_path, MINIMAL + "[solver]\nn = 1025\nres_tol = 1e-12\n", "verify")
    assert status == 5
    doc = load(out / "verify.json")
    assert doc["status"] == "failed"
    assert {c["name"] for c in doc["checks"] if not c["passed"]} == {"residual_y", "residual_z"}


def test_report_command(tmp_path):
    text = MINIMAL + "[solver]\nn = 2049\n[report]\nwindow_lo = 4\nwindow_hi = 64\nmax_samples = 32\n"
    status, out = run(tmp_path, text, "report")
    assert status == 0
    doc = load(out / "report.json")
    assert doc["diagnostics"]["fitted_exponent_u"] >= 0.9
    assert doc["claimed_exponent_u"] == pytest.approx(1.25)
    with open(out / "decay.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "dev_u", "I_p", "dev_v", "I_q"] and len(rows) == 33


def test_report_zero_problem_window_too_far(tmp_path):
    status, out = run(tmp_path, MINIMAL.replace('"r^-4"', '"0"'), "report")
    assert status == 2
    assert load(out / "error.json")["category"] == "WindowTooFar"


def test_repeated_runs_byte_identical(tmp_path):
    cfg = parse_config(MINIMAL + "[solver]\nn = 1025\n")
    for command, files in (("solve-radial", ("radial_solution.csv", "solve-radial.json")),
                           ("verify", ("verify.json",))):
        run_command(cfg, command, tmp_path / "a", seed=3)
        run_command(cfg, command, tmp_path / "b", seed=3)
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(MINIMAL)
    proc = subprocess.run([sys.executable, "-m", "lefsolve", "--config", str(cfg),
                           "--command", "threshold", "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "threshold.json").exists()


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, 2.0 ** -1074, 1.7976931348623157e308, -0.0):
        assert float(fmt_float(x)) == x
    assert dumps({"a": float("nan"), "b": [1, 2.5], "c": None, "d": True}) == (
        '{\n  "a": null,\n  "b": [\n    1,\n    2.5000000000000000e+00\n  ],\n'
        '  "c": null,\n  "d": true\n}\n'
    )
