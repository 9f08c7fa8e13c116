import json
import subprocess
import sys

import pytest

from chiti.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VIOLATION, GRID_ENV, main

PI4, PI34 = "0.7853981634", "2.3561944902"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eigen_hemisphere(capsys):
    code, out, _ = run(capsys, "eigen", "--N", "2", "--cap", "0.5")
    assert code == EXIT_OK
    assert out.strip() == "lambda = 2.000000"


def test_eigen_interval_matches_oracle(capsys, oracle):
    frozen = next(r for r in oracle["eigen"] if r["N"] == 3.0 and r["domain"][1] == 0.4)
    code, out, _ = run(capsys, "eigen", "--N", "3", "--interval", "0.4", "2.2", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["result"]["lambda"] == pytest.approx(frozen["lambda"], rel=1e-4)
    assert doc["config"]["domain"] == {"kind": "interval", "a": 0.4, "b": 2.2}


def test_eigen_csv_and_samples(capsys):
    code, out, _ = run(capsys, "eigen", "--N", "2", "--cap", "0.5", "--format", "csv")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[0].startswith("# config: {")
    assert lines[1] == "N,K,domain,lambda"
    assert lines[2].startswith("2.0,1.0,cap(0.5),")
    code, out, _ = run(capsys, "eigen", "--N", "2", "--cap", "0.5", "--format", "json", "--samples", "5")
    res = json.loads(out)["result"]
    assert len(res["t"]) == 5 and res["z"][0] == 1.0 and res["z"][-1] == 0.0


@pytest.mark.parametrize("argv", [
    ["eigen", "--N", "0.5", "--cap", "0.5"],
    ["eigen", "--N", "2"],
    ["eigen", "--N", "2", "--cap", "1.5"],
    ["eigen", "--N", "2", "--interval", "2.0", "1.0"],
    ["eigen", "--N", "2", "--K", "-1", "--cap", "0.5"],
    ["chiti", "--N", "2", "--cap", "0.3", "--p", "2", "--q", "1,4"],
    ["chiti", "--N", "2", "--cap", "0.3", "--q", "1,x"],
    ["stability", "--N", "3", "--sweep", "nope", "3"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_USAGE


def test_chiti_cap_is_rigid(capsys):
    code, out, _ = run(capsys, "chiti", "--N", "2", "--cap", "0.3", "--p", "1", "--q", "1,2,4")
    assert code == EXIT_OK
    rep = json.loads(out)["result"]["report"]
    assert rep["slack"] == [0.0, 0.0, 0.0]
    assert rep["equality_case"] is True


def test_chiti_interval(capsys):
    code, out, _ = run(capsys, "chiti", "--N", "2", "--interval", PI4, PI34, "--p", "1", "--q", "1,2,4,8,inf")
    assert code == EXIT_OK
    res = json.loads(out)["result"]
    assert all(s >= 0 for s in res["report"]["slack"])
    assert res["report"]["q_grid"][-1] == "inf"
    assert 0 < res["report"]["r1"] < res["report"]["alpha"]
    assert res["checks"]["violations"] == []


def test_chiti_small_domain(capsys):
    code, out, _ = run(capsys, "chiti", "--N", "4", "--interval", "1.0", "1.1", "--p", "2", "--q", "2,16")
    assert code == EXIT_OK
    rep = json.loads(out)["result"]["report"]
    assert rep["alpha"] < 0.01 * rep["v"]
    assert min(rep["slack"]) >= -1e-6


def test_negative_tolerance_is_usage_error(capsys):
    code, _, _ = run(capsys, "chiti", "--N", "2", "--cap", "0.3", "--tol-num", "-1")
    assert code == EXIT_USAGE


def test_chiti_csv(capsys):
    code, out, _ = run(capsys, "chiti", "--N", "2", "--cap", "0.3", "--format", "csv")
    lines = out.splitlines()
    assert lines[1] == "q,slack" and lines[-1].startswith("inf,")


def test_stability_cap(capsys):
    code, out, _ = run(capsys, "stability", "--N", "2", "--cap", "0.4")
    assert code == EXIT_OK
    rep = json.loads(out)["result"]["report"]
    assert rep["delta"] == 0.0 and rep["status"] == "rigid"


def test_stability_interval(capsys):
    code, out, _ = run(capsys, "stability", "--N", "2", "--interval", PI4, PI34)
    assert code == EXIT_OK
    rep = json.loads(out)["result"]["report"]
    assert rep["delta"] > 0 and rep["y"] is not None
    assert rep["status"] == "outside stability regime"


def test_stability_sweep_csv(capsys, tmp_path):
    path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "stability", "--N", "3", "--sweep", "caps-to-interval", "3",
                       "--grid-n", "6000", "--cells", "1000", "--format", "csv", "-o", str(path))
    assert code == EXIT_OK
    assert out.strip() == "3 sweep rows"
    lines = path.read_text().splitlines()
    assert lines[1].startswith("k,a,b,v,alpha,delta")
    ratios = [float(row.split(",")[7]) for row in lines[2:]]
    assert len(ratios) == 3 and ratios[0] > ratios[1] > ratios[2] > 1.0


def test_output_file_and_determinism(capsys, tmp_path):
    path = tmp_path / "out.json"
    argv = ["chiti", "--N", "3", "--interval", "0.5", "2.6", "--p", "2", "-o", str(path)]
    assert main(argv) == EXIT_OK
    first = path.read_bytes()
    assert main(argv) == EXIT_OK
    assert path.read_bytes() == first
    out = capsys.readouterr().out
    assert "min slack" in out
    assert b"\r\n" not in first
    doc = json.loads(first)
    assert doc["config"]["output"] == str(path)
    assert set(doc["config"]) >= {"N", "K", "domain", "p", "q_grid", "grid_n", "tol_num", "tol_eq", "tol_band"}


def test_grid_env_precedence(capsys, monkeypatch):
    monkeypatch.setenv(GRID_ENV, "5000")
    _, out, _ = run(capsys, "eigen", "--N", "2", "--cap", "0.5", "--format", "json")
    assert json.loads(out)["config"]["grid_n"] == 5000
    _, out, _ = run(capsys, "eigen", "--N", "2", "--cap", "0.5", "--format", "json", "--grid-n", "7000")
    assert json.loads(out)["config"]["grid_n"] == 7000
    monkeypatch.setenv(GRID_ENV, "lots")
    code, _, err = run(capsys, "eigen", "--N", "2", "--cap", "0.5")
    assert code == EXIT_USAGE and GRID_ENV in err


def test_solver_failure_exit_code(capsys, monkeypatch):
    from chiti import cli
    from chiti.eigensolver import SolverError

    def boom(*args, **kwargs):
        raise SolverError("no bracket")

    monkeypatch.setattr(cli, "first_eigen", boom)
    code, _, err = run(capsys, "eigen", "--N", "2", "--cap", "0.5")
    assert code == EXIT_SOLVER and "no bracket" in err


def test_violation_exit_code(capsys, monkeypatch):
    from chiti import cli

    real = cli.analyze

    def rigged(*args, **kwargs):
        import dataclasses

        return dataclasses.replace(real(*args, **kwargs), violations=("reverse-holder",))

    monkeypatch.setattr(cli, "analyze", rigged)
    code, _, err = run(capsys, "chiti", "--N", "2", "--cap", "0.3")
    assert code == EXIT_VIOLATION and "violation" in err


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "chiti.cli", "eigen", "--N", "5", "--cap", "0.5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == EXIT_OK
    assert float(proc.stdout.split("=")[1]) == pytest.approx(5.0, abs=1e-6)
    help_text = subprocess.run([sys.executable, "-m", "chiti.cli", "--help"],
                               capture_output=True, text=True, check=False).stdout
    assert "k,a,b,v,alpha,delta" in help_text and "q,slack" in help_text
