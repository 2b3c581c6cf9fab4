"""Permutation search by removal, fill, and degree scores.

The search repeatedly picks vertices to marginalize out of a moral-subgraph
oracle.  A vertex whose removal deletes edges (positive removal score) is
always safe to place last among the remainder; when no such vertex exists,
a bounded breadth-first search follows minimum-fill candidates up to w
levels deep looking for one.  The reversed pick sequence is the returned
ordering, so earlier picks end up later in the permutation.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .graph_core import Permutation
from .oracles import MoralOracle

BASELINE_STRATEGIES = ("md", "mf", "mr", "rp")


@dataclass(frozen=True)
class SearchPath:
    """A pick sequence with the scores of its final vertex.

    r and d are the removal score and the degree of nodes[-1] measured in
    the state it was chosen from.
    """

    nodes: tuple[int, ...]
    r: int
    d: int


@dataclass(frozen=True)
class StepRecord:
    """One search step: what was picked and what it cost."""

    nodes: tuple[int, ...]
    r: int
    d: int
    branches: int
    ops: int


@dataclass(frozen=True)
class OrderingResult:
    permutation: Permutation
    per_step_log: tuple[StepRecord, ...]
    wall_time: float

    @property
    def ops(self) -> int:
        return sum(rec.ops for rec in self.per_step_log)


def _expand(
    oracle: MoralOracle,
) -> list[tuple[int, MoralOracle, int, int, int]]:
    """Score every candidate: (vertex, child oracle, removal, fill, degree)."""
    out = []
    for k in sorted(oracle.vertices):
        child, delta = oracle.marginalize(k)
        out.append((k, child, delta.removal_score, delta.fill_score, oracle.degree(k)))
    return out


def _rfd_step(
    oracle: MoralOracle, w: int, max_branch: int | None
) -> tuple[SearchPath, int]:
    """One bounded search for a positive-removal pick sequence.

    Levels expand the argmax-removal candidates when any removal score is
    positive, otherwise the argmin-fill candidates.  The search stops as
    soon as a level produces a positive best removal score or the depth
    budget runs out, then returns the best path: maximal removal score,
    ties by smallest degree, remaining ties by smallest node sequence.
    """
    if w < 1:
        raise ValueError(f"search depth must be >= 1, got {w}")
    if not oracle.vertices:
        raise ValueError("oracle has no vertices left")
    if max_branch is not None and max_branch < 1:
        raise ValueError(f"max_branch must be >= 1, got {max_branch}")
    # frontier entries: (nodes, oracle after picking them, r of last pick, d of last pick)
    frontier: list[tuple[tuple[int, ...], MoralOracle, int, int]] = [
        ((), oracle, 0, 0)
    ]
    branches = 0
    best_r = 0
    depth_left = w
    while depth_left > 0 and best_r == 0:
        next_frontier: list[tuple[tuple[int, ...], MoralOracle, int, int]] = []
        for nodes, state, r_last, d_last in frontier:
            if not state.vertices:
                # nothing left to pick along this path; keep it as a candidate
                next_frontier.append((nodes, state, r_last, d_last))
                continue
            scored = _expand(state)
            branches += len(scored)
            r_max = max(s[2] for s in scored)
            if r_max > 0:
                chosen = [s for s in scored if s[2] == r_max]
            else:
                f_min = min(s[3] for s in scored)
                chosen = [s for s in scored if s[3] == f_min]
            for k, child, r, _f, d in chosen:
                next_frontier.append((nodes + (k,), child, r, d))
        if max_branch is not None and len(next_frontier) > max_branch:
            next_frontier = next_frontier[:max_branch]
        frontier = next_frontier
        depth_left -= 1
        best_r = max(entry[2] for entry in frontier)
    candidates = [entry for entry in frontier if entry[2] == best_r]
    nodes, _state, r, d = min(candidates, key=lambda e: (e[3], e[0]))
    return SearchPath(nodes, r, d), branches


def rfd_step(
    oracle: MoralOracle, w: int, max_branch: int | None = None
) -> SearchPath:
    """Pick sequence found by one depth-w search from the oracle's state."""
    path, _branches = _rfd_step(oracle, w, max_branch)
    return path


def rfd(
    oracle: MoralOracle, w: int, max_branch: int | None = None
) -> OrderingResult:
    """Full ordering: run depth-w steps until every vertex is placed.

    Returns the reversal of the pick sequence, so the first vertex picked
    (the one the scores mark as a sink candidate) is last in the ordering.
    """
    start = time.perf_counter()
    state = oracle
    picked: list[int] = []
    log: list[StepRecord] = []
    while state.vertices:
        ops_before = state.counter.count
        path, branches = _rfd_step(state, w, max_branch)
        for k in path.nodes:
            state, _delta = state.marginalize(k)
        picked.extend(path.nodes)
        log.append(
            StepRecord(path.nodes, path.r, path.d, branches, state.counter.count - ops_before)
        )
    perm = Permutation(tuple(reversed(picked)))
    return OrderingResult(perm, tuple(log), time.perf_counter() - start)


def baseline_perm(oracle: MoralOracle, strategy: str, seed: int = 0) -> OrderingResult:
    """Greedy or random orderings to compare the search against.

    md picks a minimum-degree vertex, mf a minimum-fill vertex, mr a
    maximum-removal vertex; ties are broken uniformly at random from seed.
    rp is a uniform random permutation.  All return the reversed pick
    sequence like rfd.
    """
    if strategy not in BASELINE_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if not oracle.vertices:
        raise ValueError("oracle has no vertices left")
    rng = random.Random(seed)
    start = time.perf_counter()
    state = oracle
    picked: list[int] = []
    log: list[StepRecord] = []
    if strategy == "rp":
        order = sorted(state.vertices)
        rng.shuffle(order)
        picked = order
        log.append(StepRecord(tuple(order), 0, 0, 0, 0))
    else:
        while state.vertices:
            ops_before = state.counter.count
            if strategy == "md":
                degrees = {k: state.degree(k) for k in sorted(state.vertices)}
                best = min(degrees.values())
                ties = [k for k, v in degrees.items() if v == best]
                pick = rng.choice(ties)
                child, delta = state.marginalize(pick)
                r, d = delta.removal_score, degrees[pick]
                branches = len(degrees)
            else:
                scored = _expand(state)
                branches = len(scored)
                if strategy == "mf":
                    best = min(s[3] for s in scored)
                    ties = [s for s in scored if s[3] == best]
                else:  # mr
                    best = max(s[2] for s in scored)
                    ties = [s for s in scored if s[2] == best]
                pick, child, r, _f, d = ties[rng.randrange(len(ties))]
            picked.append(pick)
            state = child
            log.append(
                StepRecord((pick,), r, d, branches, state.counter.count - ops_before)
            )
    perm = Permutation(tuple(reversed(picked)))
    return OrderingResult(perm, tuple(log), time.perf_counter() - start)
