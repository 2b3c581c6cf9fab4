"""Experiment orchestration: sweeps, persistence, and plots.

A run is a deterministic function of (spec, master seed): every replicate
seed is derived by hashing the coordinate tuple, and results.csv is written
without any timing information so reruns are byte-identical.  Wall times
and their fits live in a timings.json sidecar; meta.json records the spec
and metric conventions.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .benchgen import (
    GenConfig,
    Metrics,
    dense_bk,
    erdos_renyi_dag,
    evaluate,
    parse_rho,
    sample_data,
    sem_from_dag,
)
from .gaussian import CiTestConfig, gaussian_sample_ci
from .graph_core import Dag, dsep_ci, minimal_imap
from .oracles import MoralOracle, OpCounter, moral_oracle
from .rfd import BASELINE_STRATEGIES, OrderingResult, baseline_perm, rfd

ALGORITHMS = ("rfd-w1", "rfd-w2", "rfd-w3", "md", "mf", "mr", "rp")

PLOT_KINDS = ("ratio-vs-p", "time-vs-tpr", "tpr-vs-p", "fpr-vs-p")

_RFD_NAME = re.compile(r"^rfd-w(\d+)$")

_N_RULE = re.compile(r"^\s*(\d+)\s*\*?\s*(p?)\s*$")


def derive_seed(*parts: object) -> int:
    """64-bit seed hashed from the master seed and coordinate labels."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def parse_n_rule(rule: str | int, p: int) -> int:
    """Sample count from a constant ("400") or a multiple of p ("20p")."""
    if isinstance(rule, int):
        n = rule
    else:
        m = _N_RULE.match(rule)
        if not m:
            raise ValueError(f"cannot parse sample rule {rule!r}; use e.g. '400' or '20p'")
        n = int(m.group(1)) * (p if m.group(2) else 1)
    if n < 1:
        raise ValueError(f"sample rule {rule!r} gives nonpositive n")
    return n


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment sweep.

    family "er" sweeps Erdos-Renyi graphs over p_list x rho_list; family
    "bk" sweeps the dense two-layer graphs, reading p_list as K values and
    ignoring rho_list.  oracle picks the noiseless search oracle; noisy
    mode always estimates from samples.
    """

    mode: str
    algorithms: tuple[str, ...]
    p_list: tuple[int, ...]
    rho_list: tuple[str, ...] = ("0.5",)
    family: str = "er"
    n_rule: str = "20p"
    alpha_list: tuple[float, ...] = (0.001,)
    replicates: int = 100
    seed: int = 0
    oracle: str = "exact"
    scaling: bool = False
    max_branch: int | None = None
    weight_low: float = 0.25
    weight_high: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("noiseless", "noisy"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.algorithms:
            raise ValueError("need at least one algorithm")
        for name in self.algorithms:
            if name not in BASELINE_STRATEGIES and not _RFD_NAME.match(name):
                raise ValueError(f"unknown algorithm {name!r}")
        if not self.p_list or any(p < 1 for p in self.p_list):
            raise ValueError("p_list must be nonempty positive integers")
        if self.family not in ("er", "bk"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "er" and not self.rho_list:
            raise ValueError("rho_list must be nonempty for family 'er'")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.oracle not in ("exact", "dsep"):
            raise ValueError(f"unknown oracle {self.oracle!r}")
        for a in self.alpha_list:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must be in (0, 1), got {a}")
        if self.max_branch is not None and self.max_branch < 1:
            raise ValueError("max_branch must be >= 1 when set")

    @classmethod
    def from_toml(cls, path: str | Path) -> "ExperimentSpec":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        kwargs: dict = {}
        for key, value in raw.items():
            if key in ("algorithms", "p_list", "alpha_list"):
                kwargs[key] = tuple(value)
            elif key == "rho_list":
                kwargs[key] = tuple(str(v) for v in value)
            elif key == "n_rule":
                kwargs[key] = str(value)
            elif key == "max_branch":
                kwargs[key] = None if value == 0 else int(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


@dataclass
class ResultRow:
    """One (coordinate, replicate, algorithm) outcome."""

    mode: str
    family: str
    algorithm: str
    p: int
    k: int | None
    rho: str | None
    rho_value: float | None
    n: int | None
    alpha: float | None
    replicate: int
    seed: int
    true_edges: int | None = None
    est_edges: int | None = None
    edge_ratio: float | None = None
    exact_recovery: bool | None = None
    tpr: float | None = None
    fpr: float | None = None
    shd: int | None = None
    ops: int = 0
    steps: int = 0
    error: str = ""
    wall_time: float = 0.0  # kept out of results.csv


RESULT_COLUMNS = (
    "mode",
    "family",
    "algorithm",
    "p",
    "k",
    "rho",
    "rho_value",
    "n",
    "alpha",
    "replicate",
    "seed",
    "true_edges",
    "est_edges",
    "edge_ratio",
    "exact_recovery",
    "tpr",
    "fpr",
    "shd",
    "ops",
    "steps",
    "error",
)


def run_algorithm(
    name: str, oracle: MoralOracle, seed: int, max_branch: int | None = None
) -> OrderingResult:
    """Dispatch an algorithm name from ALGORITHMS onto an oracle."""
    m = _RFD_NAME.match(name)
    if m:
        return rfd(oracle, int(m.group(1)), max_branch)
    if name in BASELINE_STRATEGIES:
        return baseline_perm(oracle, name, seed)
    raise ValueError(f"unknown algorithm {name!r}")


def _instance(spec: ExperimentSpec, size: int, rho_str: str | None, seed: int):
    """Build (sem, dag, k, rho_value) for one coordinate."""
    if spec.family == "bk":
        dag = dense_bk(size)
        sem = sem_from_dag(dag, seed, spec.weight_low, spec.weight_high)
        return sem, sem.dag(), size, None
    rho = parse_rho(rho_str, size)
    cfg = GenConfig(size, rho, spec.weight_low, spec.weight_high, seed)
    sem = erdos_renyi_dag(cfg)
    return sem, sem.dag(), None, rho


def _fresh_oracle(
    spec: ExperimentSpec, sem, dag: Dag, data, alpha: float | None
) -> MoralOracle:
    counter = OpCounter()
    if spec.mode == "noisy":
        cfg = CiTestConfig(mode="fisher-z", alpha=alpha)
        return moral_oracle(data, cfg, counter)
    if spec.oracle == "dsep":
        return moral_oracle(dag, counter=counter)
    return moral_oracle(sem, CiTestConfig(mode="exact-threshold"), counter)


def _metric_fields(row: ResultRow, m: Metrics) -> None:
    row.true_edges = m.true_edges
    row.est_edges = m.est_edges
    row.edge_ratio = m.edge_ratio
    row.exact_recovery = m.exact_recovery
    row.tpr = m.tpr
    row.fpr = m.fpr
    row.shd = m.shd


def _run_cell(spec: ExperimentSpec, size: int, rho_str: str | None, rep: int) -> list[ResultRow]:
    """All algorithm rows for one (coordinate, replicate) cell."""
    base = derive_seed(spec.seed, spec.mode, spec.family, size, rho_str, rep)
    rows: list[ResultRow] = []
    alphas: tuple[float | None, ...]
    if spec.mode == "noisy":
        alphas = spec.alpha_list
    else:
        alphas = (None,)
    try:
        sem, dag, k, rho_value = _instance(spec, size, rho_str, base)
        data = None
        n = None
        if spec.mode == "noisy":
            n = parse_n_rule(spec.n_rule, dag.p)
            data = sample_data(sem, n, derive_seed(base, "data"))
    except Exception as exc:  # instance generation failed: every row errors
        msg = f"{type(exc).__name__}: {exc}"
        for alpha in alphas:
            for alg in spec.algorithms:
                rows.append(
                    ResultRow(spec.mode, spec.family, alg, 0, None, rho_str, None,
                              None, alpha, rep, base, error=msg)
                )
        return rows
    for alpha in alphas:
        for alg in spec.algorithms:
            row = ResultRow(
                spec.mode, spec.family, alg, dag.p, k, rho_str, rho_value,
                n, alpha, rep, base,
            )
            try:
                oracle = _fresh_oracle(spec, sem, dag, data, alpha)
                result = run_algorithm(
                    alg, oracle, derive_seed(base, alg, alpha), spec.max_branch
                )
                if spec.mode == "noisy":
                    ci = gaussian_sample_ci(data, alpha)
                else:
                    ci = dsep_ci(dag)
                estimate = minimal_imap(ci, result.permutation)
                _metric_fields(row, evaluate(dag, estimate, result.wall_time))
                row.ops = result.ops
                row.steps = len(result.per_step_log)
                row.wall_time = result.wall_time
                if result.ops != oracle.counter.count:
                    row.error = (
                        f"ops mismatch: log says {result.ops},"
                        f" counter says {oracle.counter.count}"
                    )
            except Exception as exc:
                row.error = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows


def _cells(spec: ExperimentSpec) -> list[tuple[int, str | None, int]]:
    rhos: tuple[str | None, ...]
    rhos = (None,) if spec.family == "bk" else spec.rho_list
    return [
        (size, rho, rep)
        for size in spec.p_list
        for rho in rhos
        for rep in range(spec.replicates)
    ]


def _cell_star(args: tuple) -> list[ResultRow]:
    return _run_cell(*args)


def _sort_rows(spec: ExperimentSpec, rows: list[ResultRow]) -> list[ResultRow]:
    def alg_index(name: str) -> int:
        try:
            return spec.algorithms.index(name)
        except ValueError:
            return len(spec.algorithms)

    return sorted(
        rows,
        key=lambda r: (
            r.p,
            r.k if r.k is not None else -1,
            r.rho or "",
            r.alpha if r.alpha is not None else -1.0,
            r.replicate,
            alg_index(r.algorithm),
        ),
    )


def _run(spec: ExperimentSpec, jobs: int = 1) -> list[ResultRow]:
    cells = _cells(spec)
    args = [(spec, size, rho, rep) for size, rho, rep in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_cell_star, args))
    else:
        chunks = [_run_cell(*a) for a in args]
    return _sort_rows(spec, [row for chunk in chunks for row in chunk])


def run_noiseless(spec: ExperimentSpec, jobs: int = 1) -> list[ResultRow]:
    """Exact-information sweep: search on the true structure, score the IMAP."""
    if spec.mode != "noiseless":
        raise ValueError("spec.mode must be 'noiseless'")
    return _run(spec, jobs)


def run_noisy(spec: ExperimentSpec, jobs: int = 1) -> list[ResultRow]:
    """Finite-sample sweep: estimate structure from data at each alpha."""
    if spec.mode != "noisy":
        raise ValueError("spec.mode must be 'noisy'")
    for p in spec.p_list:
        size = dense_bk(p).p if spec.family == "bk" else p
        if parse_n_rule(spec.n_rule, size) <= size + 3:
            raise ValueError(f"n rule {spec.n_rule!r} gives n <= p + 3 at p={size}")
    return _run(spec, jobs)


def _loglog_slope(points: list[tuple[float, float]]) -> float:
    """Least-squares slope of log y against log x."""
    if len(points) < 2:
        raise ValueError("need at least two sizes to fit a slope")
    xs = [math.log(x) for x, _ in points]
    ys = [math.log(y) for _, y in points]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx


def scaling_fits(rows: list[ResultRow], value: str = "ops") -> dict[str, float]:
    """Per-algorithm log-log slope of mean ops (or wall_time) against p."""
    if value not in ("ops", "wall_time"):
        raise ValueError("value must be 'ops' or 'wall_time'")
    per_alg: dict[str, dict[int, list[float]]] = {}
    for row in rows:
        if row.error:
            continue
        v = float(getattr(row, value))
        if v <= 0:
            continue
        per_alg.setdefault(row.algorithm, {}).setdefault(row.p, []).append(v)
    fits = {}
    for alg, by_p in sorted(per_alg.items()):
        points = [
            (float(p), sum(vals) / len(vals)) for p, vals in sorted(by_p.items())
        ]
        fits[alg] = _loglog_slope(points)
    return fits


def run_scaling(spec: ExperimentSpec, jobs: int = 1) -> tuple[list[ResultRow], dict[str, float]]:
    """Sweep over p and fit the log-log slope of operation counts."""
    if len(set(spec.p_list)) < 2:
        raise ValueError("scaling needs at least two distinct sizes in p_list")
    rows = run_noiseless(spec, jobs) if spec.mode == "noiseless" else run_noisy(spec, jobs)
    return rows, scaling_fits(rows, "ops")


# -- persistence ------------------------------------------------------------


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _parse_cell(name: str, text: str) -> object:
    if text == "":
        return None
    if name in ("mode", "family", "algorithm", "rho", "error"):
        return text
    if name in ("p", "k", "n", "replicate", "seed", "true_edges", "est_edges",
                "shd", "ops", "steps"):
        return int(text)
    if name == "exact_recovery":
        return text == "true"
    return float(text)


def write_results_csv(rows: list[ResultRow], path: str | Path) -> None:
    """Deterministic results table; timing lives in timings.json instead."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# causal-perm v{__version__}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in RESULT_COLUMNS])


def read_results_csv(path: str | Path) -> list[ResultRow]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results columns in {path}")
        rows = []
        for rec in reader:
            data = {c: _parse_cell(c, v) for c, v in zip(RESULT_COLUMNS, rec)}
            data["error"] = data["error"] or ""
            rows.append(ResultRow(**data))
    return rows


def write_timings_json(rows: list[ResultRow], path: str | Path,
                       time_fits: dict[str, float] | None = None) -> None:
    """Wall times keyed by position in the (sorted) results table."""
    payload = {
        "version": __version__,
        "wall_times_s": [row.wall_time for row in rows],
        "time_slopes": time_fits or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def attach_timings(rows: list[ResultRow], path: str | Path) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    times = payload.get("wall_times_s", [])
    if len(times) != len(rows):
        raise ValueError("timings file does not match the results table")
    for row, t in zip(rows, times):
        row.wall_time = float(t)


def write_meta_json(spec: ExperimentSpec, path: str | Path,
                    extra: dict | None = None) -> None:
    payload = {
        "version": __version__,
        "spec": {
            f.name: (list(v) if isinstance(v := getattr(spec, f.name), tuple) else v)
            for f in fields(spec)
        },
        "conventions": {
            "tpr_fpr": "undirected skeleton adjacencies",
            "edge_ratio": "estimated / true directed edge counts; nan when truth is empty",
            "timing": "wall clock of the ordering call only; see timings.json",
        },
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fits_csv(fits: dict[str, float], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# causal-perm v{__version__}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "ops_loglog_slope"])
        for alg, slope in sorted(fits.items()):
            writer.writerow([alg, _fmt(slope)])


def run_bench(spec: ExperimentSpec, out_dir: str | Path, jobs: int = 1) -> list[ResultRow]:
    """Run a spec and persist results.csv, timings.json, and meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fits: dict[str, float] | None = None
    if spec.scaling:
        rows, fits = run_scaling(spec, jobs)
    elif spec.mode == "noiseless":
        rows = run_noiseless(spec, jobs)
    else:
        rows = run_noisy(spec, jobs)
    write_results_csv(rows, out / "results.csv")
    time_fits = None
    if spec.scaling:
        write_fits_csv(fits, out / "scaling_fits.csv")
        try:
            time_fits = scaling_fits(rows, "wall_time")
        except ValueError:
            time_fits = {}
    write_timings_json(rows, out / "timings.json", time_fits)
    n_failed = sum(1 for r in rows if r.error)
    write_meta_json(spec, out / "meta.json", {"rows": len(rows), "failed": n_failed})
    return rows


# -- plotting ---------------------------------------------------------------


def _mean_sem(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _finite(value: float | None) -> bool:
    return value is not None and not math.isnan(value)


def _series_vs_p(rows: list[ResultRow], y_field: str) -> dict[str, list[tuple[float, float, float]]]:
    groups: dict[str, dict[int, list[float]]] = {}
    for row in rows:
        if row.error:
            continue
        y = getattr(row, y_field)
        if not _finite(y):
            continue
        groups.setdefault(row.algorithm, {}).setdefault(row.p, []).append(float(y))
    return {
        alg: [(float(p), *_mean_sem(vals)) for p, vals in sorted(by_p.items())]
        for alg, by_p in sorted(groups.items())
    }


def _series_time_tpr(rows: list[ResultRow]) -> dict[str, list[tuple[float, float, float]]]:
    """Per algorithm: one (mean tpr, mean time, time sem) point per alpha."""
    groups: dict[str, dict[float, tuple[list[float], list[float]]]] = {}
    for row in rows:
        if row.error or row.alpha is None:
            continue
        if not _finite(row.tpr):
            continue
        tprs, times = groups.setdefault(row.algorithm, {}).setdefault(
            row.alpha, ([], [])
        )
        tprs.append(float(row.tpr))
        times.append(float(row.wall_time))
    out: dict[str, list[tuple[float, float, float]]] = {}
    for alg, by_alpha in sorted(groups.items()):
        pts = []
        for alpha, (tprs, times) in sorted(by_alpha.items()):
            x = sum(tprs) / len(tprs)
            y, sem = _mean_sem(times)
            pts.append((x, y, sem))
        out[alg] = pts
    return out


_PLOT_Y = {
    "ratio-vs-p": ("edge_ratio", "mean edge ratio"),
    "tpr-vs-p": ("tpr", "mean true positive rate"),
    "fpr-vs-p": ("fpr", "mean false positive rate"),
}


def emit_plots(rows: list[ResultRow], kind: str, out_dir: str | Path) -> list[Path]:
    """Write <kind>.svg and the aggregated <kind>.csv behind it.

    Output is deterministic for a fixed input table: the SVG hash salt is
    pinned and no dates are embedded.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    if not rows:
        raise ValueError("empty result table")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if kind == "time-vs-tpr":
        series = _series_time_tpr(rows)
        x_label, y_label = "true positive rate", "wall time (s)"
    else:
        y_field, y_label = _PLOT_Y[kind]
        series = _series_vs_p(rows, y_field)
        x_label = "vertices p"
    if not any(series.values()):
        raise ValueError(f"no usable rows for plot kind {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{kind}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# causal-perm v{__version__}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "x", "y_mean", "y_sem"])
        for alg, pts in series.items():
            for x, y, sem in pts:
                writer.writerow([alg, _fmt(x), _fmt(y), _fmt(sem)])
    with matplotlib.rc_context({"svg.hashsalt": "causal-perm"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for alg, pts in series.items():
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            errs = [p[2] for p in pts]
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=alg)
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        ax.legend()
        fig.tight_layout()
        svg_path = out / f"{kind}.svg"
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return [svg_path, csv_path]
