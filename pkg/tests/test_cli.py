import csv
import json
from fractions import Fraction

import pytest

from histgap.analysis import BoundParams, GapConfig, gap_experiment, lemma_failure_bounds, net_sizes
from histgap.cli import evaluate_bounds, main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_experiment_gap_row_count_and_artifacts(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "experiment", "gap", "--n", 4, "--d", 2, "--T", "8,16,32", "--seeds", 5,
                           "--seed", 42, "--out-dir", tmp_path, "--deterministic")
    assert code == 0
    with open(tmp_path / "experiment_gap.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 15
    doc = json.loads((tmp_path / "experiment_gap.json").read_text())
    assert doc["config"]["master_seed"] == 42 and doc["version"]
    assert json.loads(out) == doc


def test_deterministic_runs_are_byte_identical(tmp_path, capsys):
    args = ["experiment", "gap", "--n", 2, "--T", "4,8", "--seeds", 2, "--seed", 3, "--deterministic"]
    run_cli(capsys, *args, "--out-dir", tmp_path / "a")
    run_cli(capsys, *args, "--out-dir", tmp_path / "b", "--threads", 2)
    a = (tmp_path / "a" / "experiment_gap.json").read_bytes()
    b = (tmp_path / "b" / "experiment_gap.json").read_bytes()
    assert a == b


def test_cli_matches_library_gap_run(tmp_path, capsys):
    run_cli(capsys, "experiment", "gap", "--n", 2, "--T", "4,6", "--seeds", 2, "--seed", 9, "--deterministic",
            "--out-dir", tmp_path, "--formats", "json")
    cli_doc = json.loads((tmp_path / "experiment_gap.json").read_text())
    lib = gap_experiment(GapConfig(n=2, T=[4, 6], seeds=2, master_seed=9))
    assert cli_doc["rows"] == json.loads(lib.to_json())["rows"]
    assert not (tmp_path / "experiment_gap.csv").exists()


def test_adding_seeds_keeps_existing_cells():
    small = gap_experiment(GapConfig(n=2, T=[4], seeds=2, master_seed=5)).rows
    large = gap_experiment(GapConfig(n=2, T=[4, 6], seeds=3, master_seed=5)).rows
    for row in small:
        match = [r for r in large if r["T"] == row["T"] and r["seed_index"] == row["seed_index"]]
        assert match == [row]


def test_bounds_lemma7_matches_library(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "bounds", "--lemma", 7, "--n", 6, "--d", 2, "--k", 2, "--m", 7, "--T", 20,
                           "--q", 20, "--q1", 21, "--r", 10**9, "--r1", 10**9, "--delta", "1/100",
                           "--out-dir", tmp_path, "--deterministic")
    assert code == 0
    printed = json.loads(out)["result"]
    lib = lemma_failure_bounds(BoundParams(n=6, d=2, k=2, m=7, T=20, q=20, q1=21, r=10**9, r1=10**9,
                                           delta=Fraction(1, 100)))
    assert printed["lemma7_bound_log10"] == lib["lemma7_bound_log10"]
    assert printed["s1"] == lib["s1"]
    assert Fraction(printed["lemma7_energy_rhs"]) == lib["lemma7_energy_rhs"]


def test_bounds_nets_matches_library(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "bounds", "--lemma", "nets", "--m", 4, "--k", 1, "--d", 2, "--eps", "1/2",
                           "--n", 2, "--r-circ", 1, "--out-dir", tmp_path)
    assert code == 0
    res = json.loads(out)["result"]
    lib = net_sizes(4, 1, 2, Fraction(1, 2), n=2, r_circ=1)
    assert int(res["hamiltonian_net_bound"]) == lib["hamiltonian_net_bound"] == 4 * 6**4
    assert int(res["circuit_net_bound"]) == lib["circuit_net_bound"] == 12**16
    assert evaluate_bounds({"lemma": "bhh", "n": 1, "d": 2, "s": 1, "eps": 0.5}) == {"length": 14141}


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "T": [4], "seeds": 3}))
    code, out, _ = run_cli(capsys, "experiment", "gap", "--config", cfg, "--seeds", 1, "--out-dir", tmp_path,
                           "--deterministic")
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["seeds"] == 1 and doc["config"]["n"] == 2 and len(doc["rows"]) == 1


def test_compile_and_spectrum_round_trip(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "compile", "--n", 2, "--d", 2, "--T", 4, "--seed", 1, "--out-dir", tmp_path)
    assert code == 0 and (tmp_path / "hamiltonian.json").exists()
    code, out, _ = run_cli(capsys, "spectrum", "--hamiltonian", tmp_path / "hamiltonian.json",
                           "--out-dir", tmp_path)
    assert code == 0
    assert json.loads(out)["result"]["E0"] == pytest.approx(0, abs=1e-10)
    assert (tmp_path / "spectrum.csv").read_text().startswith("index,value,residual")


def test_check_amplitudes_and_reduce(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "check-amplitudes", "--case", 1, "--T", 100, "--r", 10, "--r1", 10,
                           "--out-dir", tmp_path)
    assert code == 0
    assert json.loads(out)["report"]["ratio"] == pytest.approx(110 / 90, rel=1e-12)
    code, out, _ = run_cli(capsys, "reduce", "--count", 2, "--max-dim", 256, "--out-dir", tmp_path)
    assert code == 0 and json.loads(out)["all_pass"]


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["experiment", "gap", "--bogus"])
    assert info.value.code == 2
    assert run_cli(capsys, "experiment", "gap", "--n", 0, "--out-dir", tmp_path)[0] == 2
    assert run_cli(capsys, "bounds", "--lemma", "nets", "--m", 4, "--out-dir", tmp_path)[0] == 2
    code, _, err = run_cli(capsys, "compile", "--n", 4, "--d", 2, "--T", 10, "--memory-cap", 16,
                           "--out-dir", tmp_path)
    assert code == 3 and "resource" in err
    code, _, err = run_cli(capsys, "spectrum", "--n", 3, "--d", 2, "--T", 40, "--method", "krylov",
                           "--tol", 1e-30, "--out-dir", tmp_path)
    assert code == 4 and "converge" in err
