from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

from causalperm import Dag, read_dag, write_dag
from causalperm.cli import main


def run_cli(*argv: str) -> int:
    return main(list(argv))


@pytest.fixture()
def instance_dir(tmp_path):
    assert run_cli("gen", "--p", "6", "--rho", "0.5", "--seed", "3",
                   "--out", str(tmp_path)) == 0
    return tmp_path


# -- exit codes ----------------------------------------------------------------


def test_usage_errors_exit_1(tmp_path, capsys) -> None:
    with pytest.raises(SystemExit) as exc:
        run_cli("gen", "--p", "not-a-number", "--rho", "0.5", "--out", str(tmp_path))
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run_cli("nothing")
    assert exc.value.code == 1
    # post-parse usage problems return 1 without raising
    assert run_cli("gen", "--out", str(tmp_path)) == 1
    assert run_cli("gen", "--bk", "3", "--p", "5", "--out", str(tmp_path)) == 1
    capsys.readouterr()


def test_runtime_failures_exit_2(tmp_path, capsys) -> None:
    missing = str(tmp_path / "nope" / "dag.txt")
    assert run_cli("sample", "--dag", missing, "--n", "10",
                   "--out", str(tmp_path / "d.csv")) == 2
    bad_spec = tmp_path / "spec.toml"
    bad_spec.write_text('mode = "noiseless"\n')
    assert run_cli("bench", "--spec", str(bad_spec), "--out", str(tmp_path / "b")) == 2
    capsys.readouterr()


def test_console_script_is_installed() -> None:
    proc = subprocess.run(
        [sys.executable, "-m", "causalperm.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0


# -- gen ---------------------------------------------------------------------------


def test_gen_writes_instance(instance_dir) -> None:
    dag = read_dag(str(instance_dir / "dag.txt"))
    assert dag.p == 6
    assert dag.weights is not None
    noise = (instance_dir / "noise.txt").read_text().split()
    assert len(noise) == 6
    assert all(float(v) == 1.0 for v in noise)


def test_gen_bk_and_random_noise(tmp_path) -> None:
    out = tmp_path / "bk"
    assert run_cli("gen", "--bk", "3", "--random-noise", "--out", str(out)) == 0
    dag = read_dag(str(out / "dag.txt"))
    assert dag.p == 6 and dag.edge_count == 9
    # noise flag only affects the random family; bk keeps unit noise
    assert all(float(v) == 1.0 for v in (out / "noise.txt").read_text().split())


def test_gen_is_deterministic(tmp_path) -> None:
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("gen", "--p", "7", "--rho", "3/p", "--seed", "9",
                       "--out", str(out)) == 0
    assert (a / "dag.txt").read_bytes() == (b / "dag.txt").read_bytes()
    assert (a / "noise.txt").read_bytes() == (b / "noise.txt").read_bytes()


# -- sample -------------------------------------------------------------------------


def test_sample_writes_csv(instance_dir, tmp_path) -> None:
    out = tmp_path / "data.csv"
    assert run_cli("sample", "--dag", str(instance_dir / "dag.txt"),
                   "--noise", str(instance_dir / "noise.txt"),
                   "--n", "50", "--seed", "1", "--header", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,x4,x5,x6"
    assert len(lines) == 51
    data = np.loadtxt(str(out), delimiter=",", skiprows=1)
    assert data.shape == (50, 6)


def test_sample_rejects_unweighted_dag(tmp_path, capsys) -> None:
    write_dag(Dag(3, [(0, 1)]), str(tmp_path / "plain.txt"))
    assert run_cli("sample", "--dag", str(tmp_path / "plain.txt"), "--n", "5",
                   "--out", str(tmp_path / "d.csv")) == 1
    capsys.readouterr()


def test_sample_is_deterministic(instance_dir, tmp_path) -> None:
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli("sample", "--dag", str(instance_dir / "dag.txt"),
                       "--n", "30", "--seed", "4", "--out", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()


# -- order --------------------------------------------------------------------------


def test_order_prints_one_based_permutation(instance_dir, capsys) -> None:
    assert run_cli("order", "--dag", str(instance_dir / "dag.txt"),
                   "--algo", "rfd", "--depth", "2") == 0
    tokens = capsys.readouterr().out.split()
    assert sorted(int(t) for t in tokens) == [1, 2, 3, 4, 5, 6]


def test_order_oracles_agree_on_noiseless_input(instance_dir, tmp_path) -> None:
    outs = []
    for oracle in ("exact", "dsep"):
        out = tmp_path / f"{oracle}.txt"
        assert run_cli("order", "--dag", str(instance_dir / "dag.txt"),
                       "--algo", "rfd", "--oracle", oracle, "--out", str(out)) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]


def test_order_from_data(instance_dir, tmp_path, capsys) -> None:
    data = tmp_path / "data.csv"
    assert run_cli("sample", "--dag", str(instance_dir / "dag.txt"),
                   "--n", "400", "--seed", "2", "--out", str(data)) == 0
    capsys.readouterr()
    assert run_cli("order", "--data", str(data), "--oracle", "sample",
                   "--algo", "rfd", "--alpha", "0.01") == 0
    tokens = capsys.readouterr().out.split()
    assert sorted(int(t) for t in tokens) == [1, 2, 3, 4, 5, 6]


def test_order_usage_errors(instance_dir, tmp_path, capsys) -> None:
    assert run_cli("order", "--algo", "rfd") == 1  # no input at all
    assert run_cli("order", "--oracle", "sample", "--algo", "md",
                   "--dag", str(instance_dir / "dag.txt")) == 1
    capsys.readouterr()


def test_order_seeded_baseline_is_reproducible(instance_dir, tmp_path) -> None:
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for out in (a, b):
        assert run_cli("order", "--dag", str(instance_dir / "dag.txt"),
                       "--algo", "rp", "--seed", "8", "--out", str(out)) == 0
    assert a.read_text() == b.read_text()


# -- imap ---------------------------------------------------------------------------


def test_imap_collider_with_bad_order(tmp_path, capsys) -> None:
    write_dag(Dag(3, [(0, 2), (1, 2)]), str(tmp_path / "dag.txt"))
    assert run_cli("imap", "--dag", str(tmp_path / "dag.txt"),
                   "--perm", "3 1 2") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "3 3"
    assert out[1:] == ["1 2", "3 1", "3 2"]


def test_imap_identity_order_recovers_chain(tmp_path) -> None:
    write_dag(Dag(3, [(0, 1), (1, 2)]), str(tmp_path / "dag.txt"))
    out = tmp_path / "est.txt"
    assert run_cli("imap", "--dag", str(tmp_path / "dag.txt"),
                   "--perm", "1 2 3", "--out", str(out)) == 0
    assert read_dag(str(out)).edges() == frozenset({(0, 1), (1, 2)})


def test_imap_perm_file_and_validation(tmp_path, capsys) -> None:
    write_dag(Dag(3, [(0, 1)]), str(tmp_path / "dag.txt"))
    perm_file = tmp_path / "perm.txt"
    perm_file.write_text("2 3 1\n")
    assert run_cli("imap", "--dag", str(tmp_path / "dag.txt"),
                   "--perm-file", str(perm_file)) == 0
    assert run_cli("imap", "--dag", str(tmp_path / "dag.txt"),
                   "--perm", "1 2") == 1  # incomplete
    assert run_cli("imap", "--dag", str(tmp_path / "dag.txt"),
                   "--perm", "1 2 3", "--perm-file", str(perm_file)) == 1
    capsys.readouterr()


# -- bench and plot -------------------------------------------------------------------


@pytest.fixture()
def bench_dir(tmp_path):
    spec = tmp_path / "spec.toml"
    spec.write_text(
        """
mode = "noiseless"
algorithms = ["rfd-w1", "md"]
p_list = [5, 7]
rho_list = ["0.5"]
replicates = 2
seed = 6
"""
    )
    out = tmp_path / "bench"
    assert run_cli("bench", "--spec", str(spec), "--out", str(out)) == 0
    return out


def test_bench_writes_results(bench_dir) -> None:
    lines = (bench_dir / "results.csv").read_text().splitlines()
    assert lines[0].startswith("# causal-perm v")
    assert lines[1].split(",")[0] == "mode"
    assert len(lines) == 2 + 2 * 2 * 2
    assert (bench_dir / "timings.json").exists()
    assert (bench_dir / "meta.json").exists()


def test_bench_rerun_is_byte_identical(bench_dir, tmp_path) -> None:
    spec = bench_dir.parent / "spec.toml"
    again = tmp_path / "again"
    assert run_cli("bench", "--spec", str(spec), "--out", str(again)) == 0
    assert (bench_dir / "results.csv").read_bytes() == (again / "results.csv").read_bytes()


def test_plot_from_results_dir(bench_dir, tmp_path, capsys) -> None:
    out = tmp_path / "plots"
    assert run_cli("plot", "--results", str(bench_dir),
                   "--kind", "ratio-vs-p", "--out", str(out)) == 0
    assert (out / "ratio-vs-p.svg").exists()
    assert (out / "ratio-vs-p.csv").exists()
    capsys.readouterr()


def test_plot_time_vs_tpr_needs_timings(bench_dir, tmp_path, capsys) -> None:
    (bench_dir / "timings.json").unlink()
    assert run_cli("plot", "--results", str(bench_dir),
                   "--kind", "time-vs-tpr", "--out", str(tmp_path / "p")) == 1
    capsys.readouterr()


def test_pipeline_gen_sample_order_imap(tmp_path, capsys) -> None:
    inst = tmp_path / "inst"
    assert run_cli("gen", "--p", "5", "--rho", "0.6", "--seed", "13",
                   "--out", str(inst)) == 0
    data = tmp_path / "data.csv"
    assert run_cli("sample", "--dag", str(inst / "dag.txt"), "--n", "300",
                   "--seed", "1", "--out", str(data)) == 0
    perm = tmp_path / "perm.txt"
    assert run_cli("order", "--dag", str(inst / "dag.txt"), "--algo", "rfd",
                   "--depth", "2", "--out", str(perm)) == 0
    est = tmp_path / "est.txt"
    assert run_cli("imap", "--dag", str(inst / "dag.txt"), "--oracle", "dsep",
                   "--perm-file", str(perm), "--out", str(est)) == 0
    truth = read_dag(str(inst / "dag.txt"))
    estimate = read_dag(str(est))
    assert estimate.edge_count >= truth.edge_count
    capsys.readouterr()
