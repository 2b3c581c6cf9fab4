"""Command-line interface.

Subcommands: gen (random instance), sample (draw data), order (one
algorithm on one instance), imap (permutation to minimal IMAP), bench
(experiment spec file), plot (render results).  Exit codes: 0 success,
1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchgen import GenConfig, dense_bk, erdos_renyi_dag, parse_rho, sample_data, sem_from_dag
from .gaussian import CiTestConfig, GaussianSem, gaussian_exact_ci, gaussian_sample_ci
from .graph_core import Dag, Permutation, dsep_ci, minimal_imap, read_dag, write_dag
from .harness import (
    ExperimentSpec,
    attach_timings,
    emit_plots,
    read_results_csv,
    run_algorithm,
    run_bench,
)
from .oracles import moral_oracle


class UsageError(Exception):
    """Bad arguments detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract wants 1
    def error(self, message: str) -> "NoReturn":  # type: ignore[name-defined]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-perm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"causal-perm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a random weighted DAG")
    gen.add_argument("--p", type=int, help="vertex count (Erdos-Renyi family)")
    gen.add_argument("--rho", help="edge density: literal like 0.5 or expression like 3/p")
    gen.add_argument("--bk", type=int, help="generate the dense two-layer graph B_K instead")
    gen.add_argument("--weight-low", type=float, default=0.25)
    gen.add_argument("--weight-high", type=float, default=1.0)
    gen.add_argument("--random-noise", action="store_true",
                     help="draw noise variances from [0.5, 1.5] instead of 1")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")

    smp = sub.add_parser("sample", help="draw data from a weighted DAG")
    smp.add_argument("--dag", required=True, help="weighted DAG file")
    smp.add_argument("--noise", help="noise-variance file (one value per line; default all 1)")
    smp.add_argument("--n", type=int, required=True, help="number of samples")
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--header", action="store_true", help="write a header line")
    smp.add_argument("--out", required=True, help="output CSV file")

    order = sub.add_parser("order", help="run one ordering algorithm")
    order.add_argument("--dag", help="DAG file (exact or dsep oracle)")
    order.add_argument("--data", help="data CSV (sample oracle)")
    order.add_argument("--header", action="store_true", help="data CSV has a header line")
    order.add_argument("--algo", required=True,
                       choices=["rfd", "md", "mf", "mr", "rp"])
    order.add_argument("--depth", type=int, default=1, help="search depth w for rfd")
    order.add_argument("--oracle", choices=["exact", "dsep", "sample"], default="exact")
    order.add_argument("--alpha", type=float, default=0.001)
    order.add_argument("--max-branch", type=int, default=0, help="0 disables the cap")
    order.add_argument("--seed", type=int, default=0)
    order.add_argument("--out", help="write the permutation here instead of stdout")

    imap = sub.add_parser("imap",
                          help="minimal IMAP of a permutation")
    imap.add_argument("--dag", help="DAG file (exact or dsep oracle)")
    imap.add_argument("--data", help="data CSV (sample oracle)")
    imap.add_argument("--header", action="store_true", help="data CSV has a header line")
    imap.add_argument("--oracle", choices=["exact", "dsep", "sample"], default="dsep")
    imap.add_argument("--alpha", type=float, default=0.001)
    imap.add_argument("--perm", help="1-based order, e.g. '3 1 2'")
    imap.add_argument("--perm-file", help="file holding the 1-based order")
    imap.add_argument("--out", help="write the DAG here instead of stdout")

    bench = sub.add_parser("bench", help="run an experiment spec")
    bench.add_argument("--spec", required=True, help="TOML experiment spec")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", required=True, help="output directory")

    plot = sub.add_parser("plot", help="render plots from results")
    plot.add_argument("--results", required=True,
                      help="results directory (or results.csv path)")
    plot.add_argument("--kind", required=True,
                      choices=["ratio-vs-p", "time-vs-tpr", "tpr-vs-p", "fpr-vs-p"])
    plot.add_argument("--out", required=True, help="output directory")
    return parser


def _write_noise(path: Path, variances: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in variances:
            fh.write(f"{float(v)!r}\n")


def _read_noise(path: str, p: int) -> np.ndarray:
    values = [float(line) for line in Path(path).read_text().split()]
    if len(values) != p:
        raise ValueError(f"noise file has {len(values)} values, DAG has {p} vertices")
    return np.asarray(values)


def _read_data(path: str, header: bool) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)


def _sem_from_file(dag: Dag, noise: np.ndarray | None) -> GaussianSem:
    if dag.weights is None:
        raise UsageError("the exact oracle needs a weighted DAG file")
    weights = np.zeros((dag.p, dag.p))
    for (i, j), w in dag.weights.items():
        weights[i, j] = w
    if noise is None:
        noise = np.ones(dag.p)
    return GaussianSem(weights, noise)


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.bk is not None:
        if args.p is not None or args.rho is not None:
            raise UsageError("--bk excludes --p/--rho")
        dag = dense_bk(args.bk)
        sem = sem_from_dag(dag, args.seed, args.weight_low, args.weight_high)
    else:
        if args.p is None or args.rho is None:
            raise UsageError("need --p and --rho (or --bk K)")
        cfg = GenConfig(args.p, parse_rho(args.rho, args.p), args.weight_low,
                        args.weight_high, args.seed, args.random_noise)
        sem = erdos_renyi_dag(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dag(sem.dag(), str(out / "dag.txt"))
    _write_noise(out / "noise.txt", sem.noise_variances)
    print(f"wrote {out / 'dag.txt'} ({sem.dag().edge_count} edges) and {out / 'noise.txt'}")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    dag = read_dag(args.dag)
    noise = _read_noise(args.noise, dag.p) if args.noise else None
    sem = _sem_from_file(dag, noise)
    data = sample_data(sem, args.n, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        if args.header:
            fh.write(",".join(f"x{j + 1}" for j in range(dag.p)) + "\n")
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"wrote {args.out} ({args.n} rows, {dag.p} columns)")
    return 0


def _build_oracle(args: argparse.Namespace):
    """Oracle plus the matching CI tester and truth DAG (if any)."""
    if args.oracle == "sample":
        if not args.data:
            raise UsageError("--oracle sample needs --data")
        data = _read_data(args.data, args.header)
        cfg = CiTestConfig(mode="fisher-z", alpha=args.alpha)
        return moral_oracle(data, cfg), gaussian_sample_ci(data, args.alpha), None
    if not args.dag:
        raise UsageError(f"--oracle {args.oracle} needs --dag")
    dag = read_dag(args.dag)
    if args.oracle == "dsep":
        return moral_oracle(dag), dsep_ci(dag), dag
    sem = _sem_from_file(dag, None)
    oracle = moral_oracle(sem, CiTestConfig(mode="exact-threshold"))
    return oracle, gaussian_exact_ci(sem), dag


def _cmd_order(args: argparse.Namespace) -> int:
    oracle, _ci, _dag = _build_oracle(args)
    if args.algo == "rfd":
        name = f"rfd-w{args.depth}"
    else:
        name = args.algo
    max_branch = args.max_branch if args.max_branch > 0 else None
    result = run_algorithm(name, oracle, args.seed, max_branch)
    line = " ".join(str(v + 1) for v in result.permutation)
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    else:
        print(line)
    return 0


def _parse_perm(args: argparse.Namespace, p: int) -> Permutation:
    if (args.perm is None) == (args.perm_file is None):
        raise UsageError("need exactly one of --perm / --perm-file")
    text = args.perm if args.perm else Path(args.perm_file).read_text()
    order = tuple(int(tok) - 1 for tok in text.split())
    perm = Permutation(order)
    if sorted(order) != list(range(p)):
        raise UsageError(f"permutation must cover 1..{p}")
    return perm


def _cmd_imap(args: argparse.Namespace) -> int:
    _oracle, ci, dag = _build_oracle(args)
    if dag is not None:
        p = dag.p
    else:
        p = len(_oracle.vertices)
    perm = _parse_perm(args, p)
    estimate = minimal_imap(ci, perm)
    if args.out:
        write_dag(estimate, args.out)
        print(f"wrote {args.out} ({estimate.edge_count} edges)")
    else:
        sys.stdout.write(f"{estimate.p} {estimate.edge_count}\n")
        for i, j in sorted(estimate.edges()):
            sys.stdout.write(f"{i + 1} {j + 1}\n")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.from_toml(args.spec)
    rows = run_bench(spec, args.out, args.jobs)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {Path(args.out) / 'results.csv'}: {len(rows)} rows, {failed} failed")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    results = Path(args.results)
    csv_path = results / "results.csv" if results.is_dir() else results
    rows = read_results_csv(csv_path)
    timings = csv_path.parent / "timings.json"
    if args.kind == "time-vs-tpr":
        if not timings.exists():
            raise UsageError("time-vs-tpr needs timings.json next to results.csv")
        attach_timings(rows, timings)
    paths = emit_plots(rows, args.kind, args.out)
    print("wrote " + " ".join(str(p) for p in paths))
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "sample": _cmd_sample,
    "order": _cmd_order,
    "imap": _cmd_imap,
    "bench": _cmd_bench,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"causal-perm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"causal-perm {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
