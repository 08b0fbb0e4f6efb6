import json
import subprocess
import sys

import pytest

from qgacs.cli import main, parse_state


def run(*argv):
    return subprocess.run([sys.executable, "-m", "qgacs.cli", *argv], capture_output=True, text=True)


def test_parse_state_specs(tmp_path):
    import numpy as np
    assert np.allclose(parse_state("zero", 1), np.diag([1, 0]))
    assert np.allclose(parse_state("maximally-mixed", 2), np.eye(4) / 4)
    assert np.allclose(parse_state("basis:3", 2), np.diag([0, 0, 0, 1]))
    assert np.array_equal(parse_state("random:5", 2), parse_state("random:5", 2))
    assert np.array_equal(parse_state("haar:1:2", 2), parse_state("haar:1:2", 2))
    path = tmp_path / "s.json"
    path.write_text(json.dumps([[0.5, 0], [0, 0.5]]))
    assert np.allclose(parse_state(str(path), 1), np.eye(2) / 2)
    with pytest.raises(ValueError):
        parse_state("nonsense", 1)


def test_entropy_command(capsys):
    assert main(["entropy", "--qubits", "1", "--state", "mixed"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["entropy"] >= 1


def test_deficiency_and_mutual_info_commands(capsys):
    assert main(["deficiency", "--qubits", "1", "--sigma", "zero", "--rho", "mixed", "--top", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["result"]["ledger"]) == 2
    assert main(["mutual-info", "--qubits", "1", "--sigma", "zero", "--rho", "zero", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("command,")


def test_mu_build_writes_ledger(tmp_path, capsys):
    out = tmp_path / "mu.json"
    assert main(["mu", "build", "--qubits", "1", "--budget", "16", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["verdict"] == "pass" and summary["states"] == len(json.loads(out.read_text())["ledger"])


def test_experiment_exit_code_and_verdict_line():
    proc = run("povm", "--qubits", "1", "--instances", "2")
    assert proc.returncode == 0
    assert "povm: pass" in proc.stderr
    proc = run("explore-conjectures", "--qubits", "1", "--instances", "2")
    assert proc.returncode == 0 and "data" in proc.stderr


def test_bad_arguments_exit_nonzero():
    assert run("povm", "--charge-transforms", "maybe").returncode != 0
    assert run("nonexistent").returncode != 0


def test_two_runs_are_bit_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        assert run("selfinfo", "--qubits", "2", "--samples", "1000", "--seed", "9", "--out", str(path)).returncode in (0, 1)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
