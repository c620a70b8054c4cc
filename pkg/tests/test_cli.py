import json
import subprocess
import sys

import numpy as np
import pytest

from sl0.dictionary import write_matrix
from sl0.harness.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    run.err = cap.err
    return code, cap.out


@pytest.fixture
def inst(tmp_path, capsys):
    p = tmp_path / "inst.json"
    assert run(capsys, "gen", "--n", 10, "--m", 20, "--k", 2, "--seed", 3, "--out", p)[0] == 0
    return p


def test_solve_heuristic_report(inst, tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, _ = run(capsys, "solve", "--instance", inst, "--mode", "heuristic", "--report", rep)
    assert code == 0
    r = json.loads(rep.read_text())
    for key in ("schedule", "s_out", "residual", "F_final", "per_j_F", "wall_time_ms", "guarantees_verified"):
        assert key in r
    assert r["residual"] < 1e-9 and r["provenance"]["seed"] == 0


def test_solve_guaranteed_refusal_exit_code(inst, capsys):
    code, _ = run(capsys, "solve", "--instance", inst, "--mode", "guaranteed", "--k", 2)
    assert code == 2
    assert "SparsityTooHigh" in run.err


def test_oracle_and_constants(inst, tmp_path, capsys):
    code, out = run(capsys, "oracle", "--instance", inst, "--k-max", 3)
    assert code == 0 and json.loads(out)["k_found"] == 2
    M = tmp_path / "A.txt"
    write_matrix(M, np.random.default_rng(0).standard_normal((4, 8)))
    vals = {}
    for method in ("exact", "bound-subset", "bound-aric"):
        code, out = run(capsys, "gamma", "--matrix", M, "--n0", 2, "--method", method)
        assert code == 0
        vals[method] = json.loads(out)["value"]
    assert vals["exact"] <= vals["bound-subset"] * (1 + 1e-9)
    assert vals["bound-subset"] <= vals["bound-aric"] * (1 + 1e-9)
    code, out = run(capsys, "aric", "--matrix", M, "--k", 2)
    assert code == 0 and json.loads(out)["k"] == 2
    code, out = run(capsys, "rho", "--alpha", 0.5)
    assert json.loads(out)["rho"] > 0
    code, out = run(capsys, "concentration", "--l", 20, "--n", 40, "--r", 2.0, "--trials", 20)
    assert json.loads(out)["rate_max"] == 0


def test_msolve(tmp_path, capsys):
    M, X = tmp_path / "A.txt", tmp_path / "X.txt"
    write_matrix(M, np.random.default_rng(1).standard_normal((4, 8)))
    write_matrix(X, np.random.default_rng(2).standard_normal((4, 3)))
    code, out = run(capsys, "msolve", "--matrix", M, "--measurements", X, "--mode", "heuristic")
    assert code == 0 and np.array(json.loads(out)["S_out"]).shape == (8, 3)


def test_sweep_csv(tmp_path, capsys):
    code, out = run(capsys, "sweep", "--m", 16, "--k", "0,1", "--trials", 3, "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("alpha,m,n,k") and len(lines) == 3
    p = tmp_path / "s.csv"
    assert run(capsys, "sweep", "--m", 16, "--k", "0", "--trials", 2, "--format", "csv", "--out", p)[0] == 0
    assert (tmp_path / "s.csv.meta.json").exists()


def test_missing_file_exit_code(capsys):
    assert run(capsys, "gamma", "--matrix", "/nonexistent", "--n0", 1)[0] == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "sl0", "rho", "--alpha", "1.0"],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["alpha"] == 1.0
