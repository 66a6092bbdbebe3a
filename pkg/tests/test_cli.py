"""Command-line interface: exit codes, artifacts, reproducible reruns.

Every invocation goes through main(argv) in-process so coverage and
monkeypatching work; the console script wraps the same entry point.
"""

import json
import sys
from pathlib import Path

import pytest

from vqf.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main
from vqf.circuit import BoundCircuit, ParamCircuit, parse_qasm
from vqf.transform import Hamiltonian


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _encode_143(workdir):
    out = workdir / "clauses.txt"
    assert run("encode", "--n", "143", "--bits", "4", "--out", str(out)) == EXIT_OK
    return out


def _transform_143(workdir):
    clauses = _encode_143(workdir)
    assert run("transform", "--clauses", str(clauses),
               "--out", str(workdir)) == EXIT_OK
    hams = sorted(workdir.glob("hamiltonian-*.json"))
    assert len(hams) == 4
    return {p.name.split("-")[1]: p for p in hams}


# -- encode --------------------------------------------------------------------

def test_encode_writes_clause_file(workdir, capsys):
    out = _encode_143(workdir)
    text = out.read_text()
    assert "-1 + p1 + q1" in text
    assert "3 clauses over 4 free variables: p1, p2, q1, q2" in \
        capsys.readouterr().out


def test_encode_infeasible_exit(workdir, capsys):
    assert run("encode", "--n", "33", "--bits", "3") == EXIT_INFEASIBLE
    assert "error" in capsys.readouterr().err


def test_encode_bad_usage_exit(workdir, capsys):
    assert run("encode", "--n", "143") == EXIT_CONFIG  # missing --bits
    assert run("encode", "--n", "143", "--bits", "4",
               "--probe-depth", "9") == EXIT_CONFIG


# -- transform / compile ----------------------------------------------------------

def test_transform_writes_four_hamiltonians(workdir, capsys):
    hams = _transform_143(workdir)
    assert set(hams) == {"direct", "schaller", "grobner", "sim_grobner"}
    gro = Hamiltonian.from_json(hams["grobner"].read_text())
    assert gro.n_qubits == 6 and gro.locality == 2
    out = capsys.readouterr().out
    assert "GROBNER: locality 2, 6 qubits, 2 auxiliary" in out


def test_transform_single_kind(workdir):
    clauses = _encode_143(workdir)
    assert run("transform", "--clauses", str(clauses), "--kind", "schaller",
               "--out", str(workdir)) == EXIT_OK
    assert len(list(workdir.glob("hamiltonian-*.json"))) == 1


def test_transform_missing_file_exit(workdir):
    assert run("transform", "--clauses", "no-such-file.txt") == EXIT_CONFIG


def test_compile_writes_circuit_and_qasm(workdir, capsys):
    hams = _transform_143(workdir)
    circ = workdir / "circuit.json"
    qasm = workdir / "circuit.qasm"
    assert run("compile", "--hamiltonian", str(hams["direct"]), "--p", "1",
               "--out", str(circ), "--qasm", str(qasm),
               "--gamma", "0.4", "--beta", "0.9") == EXIT_OK
    back = ParamCircuit.from_json(circ.read_text())
    assert back.n_qubits == 4 and back.p == 1
    bound = parse_qasm(qasm.read_text())
    assert bound.n_qubits == 4
    assert "34 CNOT" in capsys.readouterr().out


def test_compile_qasm_needs_angles(workdir):
    hams = _transform_143(workdir)
    assert run("compile", "--hamiltonian", str(hams["direct"]), "--p", "1",
               "--qasm", str(workdir / "c.qasm")) == EXIT_CONFIG


def test_compile_rejects_bad_p(workdir):
    hams = _transform_143(workdir)
    assert run("compile", "--hamiltonian", str(hams["direct"]),
               "--p", "0") == EXIT_CONFIG


# -- train ------------------------------------------------------------------------

def test_train_writes_angles(workdir):
    hams = _transform_143(workdir)
    out = workdir / "train.json"
    assert run("train", "--hamiltonian", str(hams["grobner"]), "--p", "1",
               "--scale", "0.0", "--shots", "128", "--population", "6",
               "--generations", "2", "--out", str(out)) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["gamma"]) == 1 and len(doc["beta"]) == 1
    assert doc["evaluation_count"] >= 6
    assert "config_hash" in doc


def test_train_missing_noise_file(workdir):
    hams = _transform_143(workdir)
    assert run("train", "--hamiltonian", str(hams["direct"]), "--p", "1",
               "--noise", "absent.json") == EXIT_CONFIG


# -- select -----------------------------------------------------------------------

def test_select_verdict(workdir, capsys):
    assert run("select", "--n", "143", "--bits", "4", "--p", "1",
               "--budget", "16", "--out", str(workdir)) == EXIT_OK
    assert "selected: GROBNER" in capsys.readouterr().out
    sel = json.loads(next(workdir.glob("selection-*.json")).read_text())
    assert sel["selected"] == "GROBNER"
    assert len(sel["candidates"]) == 4


def test_select_budget_excludes_everything(workdir):
    assert run("select", "--n", "143", "--bits", "4", "--p", "1",
               "--budget", "2", "--out", str(workdir)) == 4


# -- config files --------------------------------------------------------------------

def _pipeline_config(workdir, **overrides):
    doc = {
        "n": 143, "bits": 4, "transforms": ["DIRECT"], "p_list": [1],
        "levels": [0.0, 0.5], "train_shots": 128, "report_shots": 256,
        "population_size": 6, "max_generations": 2, "seeds": [0],
        "qubit_budget": 16, "out_dir": str(workdir / "out"),
    }
    doc.update(overrides)
    path = workdir / "run.json"
    path.write_text(json.dumps(doc))
    return path


def test_config_unknown_key_rejected(workdir):
    cfg = _pipeline_config(workdir, fidelity=0.9)
    assert run("pipeline", "--config", str(cfg), "--dry-run") == EXIT_CONFIG


def test_config_toml_handling(workdir, capsys):
    toml = workdir / "run.toml"
    toml.write_text(
        'n = 143\nbits = 4\ntransforms = ["DIRECT"]\np_list = [1]\n'
        f'out_dir = "{workdir / "out"}"\n')
    code = run("pipeline", "--config", str(toml), "--dry-run")
    if sys.version_info >= (3, 11):
        assert code == EXIT_OK
    else:
        # no tomllib before 3.11: fail as a config error with a clear hint
        assert code == EXIT_CONFIG
        assert "JSON" in capsys.readouterr().err


def test_config_needs_instance_or_clauses(workdir):
    cfg = workdir / "run.json"
    cfg.write_text(json.dumps({"p_list": [1]}))
    assert run("sweep", "--config", str(cfg)) == EXIT_CONFIG


def test_cli_flag_overrides_config(workdir):
    cfg = _pipeline_config(workdir)
    out2 = workdir / "elsewhere"
    assert run("pipeline", "--config", str(cfg), "--dry-run",
               "--out", str(out2)) == EXIT_OK
    assert list(out2.glob("selection-*.json"))


# -- pipeline -------------------------------------------------------------------------

EXPECT_DRY = ("clauses-143-{h}.txt", "hamiltonian-direct-{h}.json",
              "stats-{h}.csv", "selection-{h}.json", "run-config-{h}.json")


def test_pipeline_dry_run_artifacts(workdir):
    cfg = _pipeline_config(workdir)
    assert run("pipeline", "--config", str(cfg), "--dry-run") == EXIT_OK
    outdir = workdir / "out"
    run_cfg = json.loads(next(outdir.glob("run-config-*.json")).read_text())
    h = run_cfg["config_hash"]
    names = {p.name for p in outdir.iterdir()}
    assert names == {pat.format(h=h) for pat in EXPECT_DRY}


def test_pipeline_full_and_rerun_identical(workdir):
    cfg = _pipeline_config(workdir)
    assert run("pipeline", "--config", str(cfg)) == EXIT_OK
    outdir = workdir / "out"
    first = {p.name: p.read_bytes() for p in outdir.iterdir()}
    assert any(n.startswith("nrpg-report-") and n.endswith(".json") for n in first)
    assert run("pipeline", "--config", str(cfg)) == EXIT_OK
    second = {p.name: p.read_bytes() for p in outdir.iterdir()}
    assert first == second


def test_pipeline_hash_ignores_out_dir(workdir):
    cfg_a = _pipeline_config(workdir, out_dir=str(workdir / "a"))
    assert run("pipeline", "--config", str(cfg_a), "--dry-run") == EXIT_OK
    cfg_b = workdir / "runb.json"
    doc = json.loads(cfg_a.read_text())
    doc["out_dir"] = str(workdir / "b")
    cfg_b.write_text(json.dumps(doc))
    assert run("pipeline", "--config", str(cfg_b), "--dry-run") == EXIT_OK
    ha = {p.name for p in (workdir / "a").iterdir()}
    hb = {p.name for p in (workdir / "b").iterdir()}
    assert ha == hb  # same config hash in every filename


def test_pipeline_clause_file_input(workdir):
    clauses = _encode_143(workdir)
    assert run("pipeline", "--clauses", str(clauses), "--transform", "GROBNER",
               "--p", "1", "--dry-run", "--out", str(workdir / "out")) == EXIT_OK
    sel = json.loads(next((workdir / "out").glob("selection-*.json")).read_text())
    assert sel["selected"] == "GROBNER"
    assert sel["instance"] == "clauses"


def test_no_command_is_config_error():
    assert run() == EXIT_CONFIG
    assert run("frobnicate") == EXIT_CONFIG
