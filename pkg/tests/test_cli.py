import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from fncbounds import cli, tables
from fncbounds.errors import ConvergenceError

REPO = Path(__file__).resolve().parents[1]


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


BOUNDS = ["bounds", "--mean", "100", "--sd", "2", "--n", "20", "--true-value", "100",
          "--taae", "0.10"]


def test_bounds_text():
    code, text = run(*BOUNDS)
    assert code == 0
    assert "lower_limit" in text and "upper_limit" in text
    assert "dhat_lower" in text


def test_bounds_json():
    code, text = run(*BOUNDS, "--gamma", "0.90", "--format", "json")
    assert code == 0
    payload = json.loads(text)
    lower = payload["tails"][0]
    assert lower["tail"] == "lower_limit"
    assert lower["upper"] == pytest.approx(5.32e-5, rel=1e-2)
    assert lower["lower"] == pytest.approx(8.69e-10, rel=1e-2)


def test_bounds_csv():
    code, text = run(*BOUNDS, "--format", "csv")
    assert code == 0 and len(text.splitlines()) == 3


@pytest.mark.parametrize("argv", [
    ["bounds", "--mean", "100", "--sd", "0", "--n", "20", "--true-value", "100", "--taae", "0.1"],
    ["bounds", "--mean", "100", "--sd", "2", "--n", "1", "--true-value", "100", "--taae", "0.1"],
    BOUNDS + ["--gamma", "1.2"],
    ["table", "--which", "7"],
    ["table", "--which", "2", "--jobs", "0"],
    ["verify", "--mu", "100", "--sigma", "4", "--n", "20", "--limit", "90", "--trials", "0"],
    ["verify", "--mu", "100", "--sigma", "4", "--n", "20"],
    ["sweep", "--n", "20"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _ = run(*argv)
    assert code == 2
    err = capsys.readouterr().err
    assert err


def test_sd_zero_names_invariant(capsys):
    run("bounds", "--mean", "100", "--sd", "0", "--n", "20", "--true-value", "100",
        "--taae", "0.1")
    assert "sd must be finite and > 0" in capsys.readouterr().err


def test_convergence_exit_3(monkeypatch, capsys):
    def fail(*a, **k):
        raise ConvergenceError("stuck", bracket=(-3.0, -2.0), residual=0.1)

    monkeypatch.setattr(cli, "bounds_report", fail)
    code, _ = run(*BOUNDS)
    assert code == 3
    assert "bracket" in capsys.readouterr().err


def test_table_convergence_exit_3(monkeypatch):
    def fail(*a, **k):
        raise ConvergenceError("stuck")

    monkeypatch.setattr(tables, "upper_tail_bounds", fail)
    code, _ = run("table", "--which", "2")
    assert code == 3


def test_table_json_records():
    code, text = run("table", "--which", "4", "--format", "json")
    assert code == 0
    assert len(json.loads(text)) == 30


def test_table_diff_at_published_level(capsys):
    golden = str(REPO / "golden" / "table2.csv")
    code, text = run("table", "--which", "2", "--gamma", "0.90", "--diff", golden,
                     "--format", "text")
    assert code == 0
    assert "30/30 rows within tolerance" in text


def test_table_diff_default_level_deviates(capsys):
    # at 0.95 the bounds differ from the published cells; see README
    code, text = run("table", "--which", "2", "--diff", "paper")
    assert code == 4
    err = capsys.readouterr().err
    assert "MISMATCH" in err and "0/30 rows within tolerance" in err
    assert len(text.splitlines()) == 61


def test_table_diff_missing_file():
    code, _ = run("table", "--which", "2", "--diff", "/nonexistent/golden.csv")
    assert code == 2


def test_table_out_file_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("table", "--which", "3", "--out", str(a))[0] == 0
    assert run("table", "--which", "3", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_explicit_surface(tmp_path):
    path = tmp_path / "s.csv"
    code, _ = run("sweep", "--mean-start", "100", "--mean-stop", "101", "--mean-step", "0.5",
                  "--sd-start", "1", "--sd-stop", "2", "--sd-step", "1", "--n", "20",
                  "--true-value", "100", "--taae", "0.1", "--tail", "upper_limit",
                  "--out", str(path))
    assert code == 0
    assert len(path.read_text().splitlines()) == 1 + 6


def test_verify_pass_and_json():
    code, text = run("verify", "--mu", "100", "--sigma", "4", "--n", "20", "--limit", "90",
                     "--gamma", "0.95", "--trials", "300", "--seed", "7", "--format", "json")
    rec = json.loads(text)
    assert rec["trials"] == 300 and rec["kind"] == "upper_lower_tail"
    assert code == (0 if rec["pass"] else 5)


def test_verify_taae_limit_selection():
    code, text = run("verify", "--mu", "100", "--sigma", "4", "--n", "20", "--taae", "0.1",
                     "--true-value", "100", "--kind", "upper-upper-tail", "--trials", "20",
                     "--format", "json")
    assert json.loads(text)["limit"] == pytest.approx(110.0)


def test_verify_exit_5_forced(monkeypatch):
    from fncbounds.mcverify import CoverageResult
    monkeypatch.setattr(cli, "simulate_coverage",
                        lambda *a, **k: CoverageResult(800, 1000, 0.8, 0.01))
    code, text = run("verify", "--mu", "100", "--sigma", "4", "--n", "20", "--limit", "90")
    assert code == 5 and "FAIL" in text


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "fncbounds", "table", "--which", "7"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
