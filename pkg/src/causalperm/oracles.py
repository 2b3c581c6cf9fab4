"""Moral-subgraph oracles.

An oracle holds the dependence structure over a shrinking vertex set and
answers marginalize(k) with a fresh oracle plus the edge changes, never
mutating itself.  All clones of one oracle share an OpCounter that charges
|V'|^2 elementary operations per marginalization, the cost of the rank-one
precision update (the d-separation variant is charged identically so that
operation counts are comparable across oracles).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    CiTestConfig,
    GaussianSem,
    InsufficientSamplesError,
    PrecisionState,
    marginal_precision_update,
    partial_correlations,
    sample_covariance,
    sem_precision,
)
from .graph_core import Dag, EdgeDelta, UGraph, moral_subgraph, undirected_edge


@dataclass
class OpCounter:
    """Mutable tally shared by an oracle and everything cloned from it."""

    count: int = 0

    def add(self, n: int) -> None:
        self.count += n


class MoralOracle(abc.ABC):
    """Dependence structure over a vertex set, marginalized one vertex at a time."""

    counter: OpCounter

    @property
    @abc.abstractmethod
    def vertices(self) -> frozenset[int]:
        ...

    @abc.abstractmethod
    def current_graph(self) -> UGraph:
        """Moral subgraph over the current vertex set."""

    @abc.abstractmethod
    def marginalize(self, k: int) -> tuple["MoralOracle", EdgeDelta]:
        """Oracle over vertices - {k} and the induced edge changes."""

    @abc.abstractmethod
    def degree(self, k: int) -> int:
        """Degree of k in the current moral subgraph."""


class DSeparationOracle(MoralOracle):
    """Moral subgraphs computed from d-separation queries against a DAG."""

    def __init__(
        self,
        dag: Dag,
        counter: OpCounter | None = None,
        _graph: UGraph | None = None,
    ) -> None:
        self._dag = dag
        self.counter = counter if counter is not None else OpCounter()
        if _graph is None:
            _graph = moral_subgraph(dag, range(dag.p))
        self._graph = _graph

    @property
    def vertices(self) -> frozenset[int]:
        return self._graph.vertices

    def current_graph(self) -> UGraph:
        return self._graph

    def marginalize(self, k: int) -> tuple["DSeparationOracle", EdgeDelta]:
        if k not in self._graph.vertices:
            raise ValueError(f"vertex {k} not in oracle")
        rest = self._graph.vertices - {k}
        new_graph = moral_subgraph(self._dag, rest)
        self.counter.add(len(rest) ** 2)
        old_edges = self._graph.induced(rest).edges()
        new_edges = new_graph.edges()
        delta = EdgeDelta(old_edges - new_edges, new_edges - old_edges)
        clone = DSeparationOracle(self._dag, self.counter, new_graph)
        return clone, delta

    def degree(self, k: int) -> int:
        self.counter.add(len(self._graph.vertices))
        return self._graph.degree(k)


class GaussianMoralOracle(MoralOracle):
    """Moral subgraphs thresholded from a (marginalized) precision matrix."""

    def __init__(
        self,
        state: PrecisionState,
        config: CiTestConfig,
        counter: OpCounter | None = None,
        _adj: np.ndarray | None = None,
    ) -> None:
        self._state = state
        self._config = config
        self.counter = counter if counter is not None else OpCounter()
        if _adj is None:
            _adj = self._threshold(state)
        self._adj = _adj

    def _threshold(self, state: PrecisionState) -> np.ndarray:
        k = len(state.vertices)
        if k == 0:
            return np.zeros((0, 0), dtype=bool)
        cutoff = self._config.cutoff(state.sample_size, k)
        adj = np.abs(partial_correlations(state)) >= cutoff
        np.fill_diagonal(adj, False)
        return adj

    @property
    def state(self) -> PrecisionState:
        return self._state

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self._state.vertices)

    def current_graph(self) -> UGraph:
        labels = self._state.vertices
        rows, cols = np.nonzero(np.triu(self._adj, 1))
        edges = [(labels[a], labels[b]) for a, b in zip(rows, cols)]
        return UGraph(labels, edges)

    def marginalize(self, k: int) -> tuple["GaussianMoralOracle", EdgeDelta]:
        idx = self._state.index_of(k)
        new_state = marginal_precision_update(self._state, k)
        self.counter.add(len(new_state.vertices) ** 2)
        new_adj = self._threshold(new_state)
        keep = np.arange(len(self._state.vertices)) != idx
        old_adj = self._adj[np.ix_(keep, keep)]
        labels = new_state.vertices

        def pairs(mask: np.ndarray) -> frozenset[tuple[int, int]]:
            rows, cols = np.nonzero(np.triu(mask, 1))
            return frozenset(
                undirected_edge(labels[a], labels[b]) for a, b in zip(rows, cols)
            )

        delta = EdgeDelta(pairs(old_adj & ~new_adj), pairs(new_adj & ~old_adj))
        clone = GaussianMoralOracle(new_state, self._config, self.counter, new_adj)
        return clone, delta

    def degree(self, k: int) -> int:
        idx = self._state.index_of(k)
        self.counter.add(len(self._state.vertices))
        return int(self._adj[idx].sum())


def moral_oracle(
    source: GaussianSem | Dag | np.ndarray,
    config: CiTestConfig | None = None,
    counter: OpCounter | None = None,
) -> MoralOracle:
    """Build the oracle matching the evidence at hand.

    A Dag gives the d-separation oracle; a GaussianSem gives the exact
    thresholded oracle; an n x p data matrix gives the Fisher-z oracle.
    """
    if isinstance(source, Dag):
        return DSeparationOracle(source, counter)
    if isinstance(source, GaussianSem):
        if config is None:
            config = CiTestConfig(mode="exact-threshold")
        if config.mode != "exact-threshold":
            raise ValueError("an exact model requires mode 'exact-threshold'")
        state = PrecisionState(tuple(range(source.p)), sem_precision(source))
        return GaussianMoralOracle(state, config, counter)
    data = np.asarray(source, dtype=float)
    if data.ndim != 2:
        raise ValueError("data source must be an n x p matrix")
    n, p = data.shape
    if n <= p + 3:
        raise InsufficientSamplesError(
            f"need n > p + 3 samples to test all marginals, got n={n}, p={p}"
        )
    if config is None:
        config = CiTestConfig(mode="fisher-z")
    if config.mode != "fisher-z":
        raise ValueError("sampled data requires mode 'fisher-z'")
    cov = sample_covariance(data)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("sample covariance is not positive definite") from None
    theta = np.linalg.inv(cov)
    theta = (theta + theta.T) / 2.0
    state = PrecisionState(tuple(range(p)), theta, sample_size=n)
    return GaussianMoralOracle(state, config, counter)
