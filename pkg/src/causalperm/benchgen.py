"""Benchmark instance generation and evaluation metrics.

Random DAGs come from an Erdos-Renyi draw over a uniformly random
topological order with edge weights bounded away from zero.  dense_bk
builds the two-layer dense family on K + C(K, 2) vertices whose moral
structure rewards removal-guided orderings.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .gaussian import GaussianSem
from .graph_core import Dag, undirected_edge


@dataclass(frozen=True)
class GenConfig:
    """Random-DAG draw: p vertices, edge density rho, weight band, seed."""

    p: int
    rho: float
    weight_low: float = 0.25
    weight_high: float = 1.0
    seed: int = 0
    random_noise: bool = False

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError(f"p must be positive, got {self.p}")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if not 0.0 < self.weight_low < self.weight_high:
            raise ValueError("need 0 < weight_low < weight_high")


_RHO_FORM = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(?:/\s*p)?\s*$")


def parse_rho(text: str, p: int) -> float:
    """Density from a literal ("0.5") or an expression in p ("3/p")."""
    if p < 1:
        raise ValueError(f"p must be positive, got {p}")
    m = _RHO_FORM.match(text)
    if not m:
        raise ValueError(f"cannot parse density {text!r}; use e.g. '0.5' or '3/p'")
    value = float(Fraction(m.group(1)))
    if text.find("/") >= 0:
        value /= p
    if not 0.0 < value <= 1.0:
        raise ValueError(f"density {text!r} gives {value} outside (0, 1] at p={p}")
    return value


def erdos_renyi_dag(cfg: GenConfig) -> GaussianSem:
    """Random linear SEM over a random topological order.

    Each forward pair under the order becomes an edge independently with
    probability rho; weights are uniform on +-[weight_low, weight_high]
    with a fair sign.  Noise variances are 1, or uniform on [0.5, 1.5]
    when cfg.random_noise is set.
    """
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(cfg.p)
    n_pairs = cfg.p * (cfg.p - 1) // 2
    include = rng.random(n_pairs) < cfg.rho
    mags = rng.uniform(cfg.weight_low, cfg.weight_high, n_pairs)
    signs = rng.integers(0, 2, n_pairs) * 2 - 1
    weights = np.zeros((cfg.p, cfg.p))
    t = 0
    for a in range(cfg.p):
        for b in range(a + 1, cfg.p):
            if include[t]:
                weights[order[a], order[b]] = signs[t] * mags[t]
            t += 1
    if cfg.random_noise:
        noise = rng.uniform(0.5, 1.5, cfg.p)
    else:
        noise = np.ones(cfg.p)
    return GaussianSem(weights, noise)


def dense_bk(k: int) -> Dag:
    """Two-layer dense DAG on k + C(k, 2) vertices.

    Each of the last C(k, 2) vertices gets a distinct 2-subset of the
    first k as parents (subsets in lexicographic order), and those last
    vertices form a complete DAG ordered by index.  The first k vertices
    are mutually nonadjacent.
    """
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    pairs = list(combinations(range(k), 2))
    p = k + len(pairs)
    edges = []
    for t, (a, b) in enumerate(pairs):
        edges.append((a, k + t))
        edges.append((b, k + t))
    for s in range(len(pairs)):
        for t in range(s + 1, len(pairs)):
            edges.append((k + s, k + t))
    return Dag(p, edges)


def sem_from_dag(
    dag: Dag,
    seed: int = 0,
    weight_low: float = 0.25,
    weight_high: float = 1.0,
) -> GaussianSem:
    """Attach weights to a DAG: its own if present, else random +-band draws."""
    rng = np.random.default_rng(seed)
    weights = np.zeros((dag.p, dag.p))
    for i, j in sorted(dag.edges()):
        if dag.weights is not None:
            weights[i, j] = dag.weight(i, j)
        else:
            mag = rng.uniform(weight_low, weight_high)
            sign = 1 if rng.integers(0, 2) else -1
            weights[i, j] = sign * mag
    return GaussianSem(weights, np.ones(dag.p))


def sample_data(model: GaussianSem, n: int, seed: int = 0) -> np.ndarray:
    """n i.i.d. rows drawn from the model by ancestral sampling."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    p = model.p
    eps = rng.standard_normal((n, p)) * np.sqrt(model.noise_variances)
    data = np.zeros((n, p))
    for j in model.dag().topological_order():
        data[:, j] = eps[:, j] + data @ model.weights[:, j]
    return data


@dataclass(frozen=True)
class Metrics:
    """Estimate-vs-truth scores.

    edge_ratio is estimated over true edge count (nan when the truth has
    no edges; exact_recovery carries the answer there).  tpr/fpr compare
    undirected skeletons; shd counts skeleton differences plus orientation
    flips on shared edges.
    """

    edge_ratio: float
    exact_recovery: bool
    tpr: float
    fpr: float
    shd: int
    true_edges: int
    est_edges: int
    wall_time: float = 0.0


def evaluate(true_dag: Dag, estimate: Dag, wall_time: float = 0.0) -> Metrics:
    """Score an estimated DAG against the truth on a shared vertex set."""
    if true_dag.p != estimate.p:
        raise ValueError(
            f"vertex sets differ: truth has {true_dag.p}, estimate has {estimate.p}"
        )
    true_dir = true_dag.edges()
    est_dir = estimate.edges()
    true_skel = {undirected_edge(i, j) for i, j in true_dir}
    est_skel = {undirected_edge(i, j) for i, j in est_dir}
    n_true, n_est = len(true_dir), len(est_dir)
    tp = len(true_skel & est_skel)
    fp = len(est_skel - true_skel)
    possible = true_dag.p * (true_dag.p - 1) // 2
    negatives = possible - len(true_skel)
    tpr = tp / len(true_skel) if true_skel else math.nan
    fpr = fp / negatives if negatives else math.nan
    shd = len(true_skel ^ est_skel)
    for e in true_skel & est_skel:
        if (e in true_dir) != (e in est_dir):
            shd += 1
    if n_true == 0:
        edge_ratio = math.nan
        exact = n_est == 0
    else:
        edge_ratio = n_est / n_true
        exact = edge_ratio == 1.0
    return Metrics(edge_ratio, exact, tpr, fpr, shd, n_true, n_est, wall_time)
