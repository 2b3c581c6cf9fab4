"""Directed and undirected graph primitives.

Vertices are integers 0..p-1.  Directed graphs are immutable DAGs with
optional edge weights; undirected graphs may live on an arbitrary vertex
subset, which is what marginalization produces.  Adjacency is kept both as
frozensets (for callers) and as bitmasks (for the reachability inner loops).
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

Edge = tuple[int, int]

# CI oracle: ci(i, j, s) is True when i and j are independent given s.
CiOracle = Callable[[int, int, frozenset[int]], bool]


class CycleError(ValueError):
    """Raised when a directed edge set contains a cycle."""


def undirected_edge(i: int, j: int) -> Edge:
    """Canonical (min, max) form of an undirected edge."""
    if i == j:
        raise ValueError(f"self loop at {i}")
    return (i, j) if i < j else (j, i)


def _iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask_of(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


class Dag:
    """Immutable directed acyclic graph on vertices 0..p-1.

    Parameters
    ----------
    p : number of vertices.
    edges : iterable of (i, j) pairs meaning i -> j.
    weights : optional {(i, j): w} covering exactly the edge set, all w nonzero.
    """

    __slots__ = ("p", "_pmask", "_cmask", "_weights", "_topo", "_desc")

    def __init__(
        self,
        p: int,
        edges: Iterable[Edge] = (),
        weights: dict[Edge, float] | None = None,
    ) -> None:
        if p < 0:
            raise ValueError(f"vertex count must be nonnegative, got {p}")
        self.p = p
        pmask = [0] * p
        cmask = [0] * p
        for i, j in edges:
            self._check_vertex(i)
            self._check_vertex(j)
            if i == j:
                raise ValueError(f"self loop at {i}")
            if (pmask[j] >> i) & 1:
                raise ValueError(f"duplicate edge ({i}, {j})")
            pmask[j] |= 1 << i
            cmask[i] |= 1 << j
        self._pmask = tuple(pmask)
        self._cmask = tuple(cmask)
        self._topo = self._toposort()
        if weights is not None:
            edge_set = self.edges()
            if set(weights) != edge_set:
                raise ValueError("weights must cover exactly the edge set")
            for e, w in weights.items():
                if w == 0:
                    raise ValueError(f"zero weight on edge {e}")
            self._weights = dict(weights)
        else:
            self._weights = None
        self._desc: tuple[int, ...] | None = None

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.p:
            raise ValueError(f"vertex {v} out of range [0, {self.p})")

    def _toposort(self) -> tuple[int, ...]:
        indeg = [m.bit_count() for m in self._pmask]
        ready = [v for v in range(self.p) if indeg[v] == 0]
        order: list[int] = []
        while ready:
            v = ready.pop()
            order.append(v)
            for c in _iter_bits(self._cmask[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != self.p:
            raise CycleError("edge set contains a directed cycle")
        return tuple(order)

    # -- basic queries ----------------------------------------------------

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(range(self.p))

    def parents(self, j: int) -> frozenset[int]:
        self._check_vertex(j)
        return frozenset(_iter_bits(self._pmask[j]))

    def children(self, i: int) -> frozenset[int]:
        self._check_vertex(i)
        return frozenset(_iter_bits(self._cmask[i]))

    def has_edge(self, i: int, j: int) -> bool:
        self._check_vertex(i)
        self._check_vertex(j)
        return bool((self._pmask[j] >> i) & 1)

    def edges(self) -> frozenset[Edge]:
        return frozenset(
            (i, j) for j in range(self.p) for i in _iter_bits(self._pmask[j])
        )

    @property
    def edge_count(self) -> int:
        return sum(m.bit_count() for m in self._pmask)

    @property
    def weights(self) -> dict[Edge, float] | None:
        return None if self._weights is None else dict(self._weights)

    def weight(self, i: int, j: int) -> float:
        if self._weights is None:
            raise ValueError("graph has no edge weights")
        return self._weights[(i, j)]

    def topological_order(self) -> tuple[int, ...]:
        return self._topo

    def _descendant_masks(self) -> tuple[int, ...]:
        # desc[v] excludes v itself; fill in reverse topological order
        if self._desc is None:
            desc = [0] * self.p
            for v in reversed(self._topo):
                acc = 0
                for c in _iter_bits(self._cmask[v]):
                    acc |= (1 << c) | desc[c]
                desc[v] = acc
            self._desc = tuple(desc)
        return self._desc

    def descendants(self, v: int) -> frozenset[int]:
        """Proper descendants of v."""
        self._check_vertex(v)
        return frozenset(_iter_bits(self._descendant_masks()[v]))

    def ancestors(self, v: int) -> frozenset[int]:
        """Proper ancestors of v."""
        self._check_vertex(v)
        bit = 1 << v
        desc = self._descendant_masks()
        return frozenset(u for u in range(self.p) if desc[u] & bit)

    def skeleton(self) -> "UGraph":
        return UGraph(range(self.p), (undirected_edge(i, j) for i, j in self.edges()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return (
            self.p == other.p
            and self._pmask == other._pmask
            and self._weights == other._weights
        )

    def __hash__(self) -> int:
        return hash((self.p, self._pmask))

    def __repr__(self) -> str:
        return f"Dag(p={self.p}, edges={sorted(self.edges())})"


class UGraph:
    """Immutable undirected graph on an explicit vertex set."""

    __slots__ = ("_vertices", "_adj", "_edges")

    def __init__(self, vertices: Iterable[int], edges: Iterable[Edge] = ()) -> None:
        self._vertices = frozenset(vertices)
        for v in self._vertices:
            if v < 0:
                raise ValueError(f"negative vertex {v}")
        adj: dict[int, set[int]] = {v: set() for v in self._vertices}
        canon = set()
        for i, j in edges:
            e = undirected_edge(i, j)
            if e[0] not in adj or e[1] not in adj:
                raise ValueError(f"edge {e} leaves the vertex set")
            canon.add(e)
            adj[e[0]].add(e[1])
            adj[e[1]].add(e[0])
        self._adj = {v: frozenset(nb) for v, nb in adj.items()}
        self._edges = frozenset(canon)

    @property
    def vertices(self) -> frozenset[int]:
        return self._vertices

    def neighbors(self, v: int) -> frozenset[int]:
        if v not in self._adj:
            raise ValueError(f"vertex {v} not in graph")
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, i: int, j: int) -> bool:
        return undirected_edge(i, j) in self._edges

    def edges(self) -> frozenset[Edge]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def induced(self, vertices: Iterable[int]) -> "UGraph":
        keep = frozenset(vertices)
        extra = keep - self._vertices
        if extra:
            raise ValueError(f"vertices {sorted(extra)} not in graph")
        return UGraph(
            keep, (e for e in self._edges if e[0] in keep and e[1] in keep)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UGraph):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._vertices, self._edges))

    def __repr__(self) -> str:
        return f"UGraph(vertices={sorted(self._vertices)}, edges={sorted(self._edges)})"


@dataclass(frozen=True)
class Permutation:
    """Total order on a vertex set; order[0] comes first."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.order)) != len(self.order):
            raise ValueError("order has repeated vertices")
        if any(v < 0 for v in self.order):
            raise ValueError("vertex ids must be nonnegative")

    def is_complete(self) -> bool:
        """True when the order covers exactly 0..len-1."""
        return sorted(self.order) == list(range(len(self.order)))

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __getitem__(self, idx: int) -> int:
        return self.order[idx]

    def position(self, v: int) -> int:
        try:
            return self.order.index(v)
        except ValueError:
            raise ValueError(f"vertex {v} not in permutation") from None

    def predecessors(self, v: int) -> frozenset[int]:
        """Vertices strictly before v."""
        return frozenset(self.order[: self.position(v)])

    def reversed(self) -> "Permutation":
        return Permutation(tuple(reversed(self.order)))


@dataclass(frozen=True)
class EdgeDelta:
    """Edge changes from marginalizing one vertex out of a moral subgraph."""

    removed: frozenset[Edge]
    filled: frozenset[Edge]

    @property
    def removal_score(self) -> int:
        return len(self.removed)

    @property
    def fill_score(self) -> int:
        return len(self.filled)


# -- d-separation ---------------------------------------------------------


def _ancestral_closure_mask(pmask: Sequence[int], seed_mask: int) -> int:
    closed = seed_mask
    stack = seed_mask
    while stack:
        low = stack & -stack
        v = low.bit_length() - 1
        stack ^= low
        new = pmask[v] & ~closed
        closed |= new
        stack |= new
    return closed


def _dconnected_mask(dag: Dag, start_mask: int, s_mask: int) -> int:
    """Vertices reachable from start_mask by active trails given s_mask.

    Standard two-state reachability: a vertex is visited "up" when entered
    through an edge pointing away from it (toward a parent or as the start),
    and "down" when entered through an edge pointing into it.  Colliders pass
    only when some descendant is conditioned on.
    """
    pmask, cmask = dag._pmask, dag._cmask
    anc_s = _ancestral_closure_mask(pmask, s_mask)
    seen_up = 0
    seen_down = 0
    frontier_up = start_mask
    frontier_down = 0
    reached = 0
    while frontier_up | frontier_down:
        fresh_up = frontier_up & ~seen_up
        fresh_down = frontier_down & ~seen_down
        seen_up |= fresh_up
        seen_down |= fresh_down
        reached |= fresh_up | fresh_down
        next_up = 0
        next_down = 0
        for v in _iter_bits(fresh_up & ~s_mask):
            next_up |= pmask[v]
            next_down |= cmask[v]
        for v in _iter_bits(fresh_down):
            if not (s_mask >> v) & 1:
                next_down |= cmask[v]
            if (anc_s >> v) & 1:
                next_up |= pmask[v]
        frontier_up = next_up
        frontier_down = next_down
    return reached


def d_separated(dag: Dag, i: int, j: int, s: Iterable[int] = ()) -> bool:
    """True when every path between i and j is blocked by s."""
    s_set = frozenset(s)
    dag._check_vertex(i)
    dag._check_vertex(j)
    for v in s_set:
        dag._check_vertex(v)
    if i == j:
        raise ValueError("endpoints must be distinct")
    if i in s_set or j in s_set:
        raise ValueError("endpoints may not appear in the conditioning set")
    reached = _dconnected_mask(dag, 1 << i, _mask_of(s_set))
    return not (reached >> j) & 1


def d_separated_sets(
    dag: Dag, a: Iterable[int], b: Iterable[int], s: Iterable[int] = ()
) -> bool:
    """True when every path from any vertex of a to any vertex of b is blocked."""
    a_set, b_set, s_set = frozenset(a), frozenset(b), frozenset(s)
    for v in a_set | b_set | s_set:
        dag._check_vertex(v)
    if a_set & b_set:
        raise ValueError("endpoint sets must be disjoint")
    if (a_set | b_set) & s_set:
        raise ValueError("endpoints may not appear in the conditioning set")
    if not a_set or not b_set:
        return True
    reached = _dconnected_mask(dag, _mask_of(a_set), _mask_of(s_set))
    return not reached & _mask_of(b_set)


def dsep_ci(dag: Dag) -> CiOracle:
    """CI oracle answering queries by d-separation in dag."""

    def ci(i: int, j: int, s: frozenset[int]) -> bool:
        return d_separated(dag, i, j, s)

    return ci


# -- moral subgraphs and marginalization ----------------------------------


def moral_subgraph(dag: Dag, vertices: Iterable[int]) -> UGraph:
    """Undirected graph on the given set joining pairs that stay dependent.

    i - j is present exactly when i and j are d-connected given all the
    other retained vertices.  On the full vertex set this is the usual
    moral graph; on subsets it is the marginal independence structure.
    """
    keep = sorted(frozenset(vertices))
    for v in keep:
        dag._check_vertex(v)
    keep_mask = _mask_of(keep)
    edges = []
    for a_idx, i in enumerate(keep):
        reached_cache: dict[int, int] = {}
        for j in keep[a_idx + 1 :]:
            s_mask = keep_mask & ~(1 << i) & ~(1 << j)
            reached = _dconnected_mask(dag, 1 << i, s_mask)
            if (reached >> j) & 1:
                edges.append((i, j))
    return UGraph(keep, edges)


def moral_graph(dag: Dag) -> UGraph:
    """Skeleton plus marriages between parents sharing a child."""
    edges = {undirected_edge(i, j) for i, j in dag.edges()}
    for j in range(dag.p):
        for a, b in combinations(sorted(dag.parents(j)), 2):
            edges.add((a, b))
    return UGraph(range(dag.p), edges)


def marginalize(graph: UGraph, dag: Dag, k: int) -> tuple[UGraph, EdgeDelta]:
    """Remove k from a moral subgraph of dag, reporting the edge changes.

    graph must be the moral subgraph of dag on graph.vertices.  Returns the
    moral subgraph on vertices - {k} together with the sets of edges that
    disappeared and appeared among the retained vertices.
    """
    if k not in graph.vertices:
        raise ValueError(f"vertex {k} not in graph")
    rest = graph.vertices - {k}
    new_graph = moral_subgraph(dag, rest)
    old_edges = graph.induced(rest).edges()
    new_edges = new_graph.edges()
    return new_graph, EdgeDelta(old_edges - new_edges, new_edges - old_edges)


def fill_score_local(graph: UGraph, k: int) -> int:
    """Number of non-adjacent neighbor pairs of k."""
    nbrs = sorted(graph.neighbors(k))
    return sum(1 for a, b in combinations(nbrs, 2) if not graph.has_edge(a, b))


def maximal_nodes(dag: Dag, vertices: Iterable[int]) -> frozenset[int]:
    """Members of the set with no proper descendant inside the set."""
    keep = frozenset(vertices)
    for v in keep:
        dag._check_vertex(v)
    keep_mask = _mask_of(keep)
    desc = dag._descendant_masks()
    return frozenset(v for v in keep if not desc[v] & keep_mask)


# -- minimal IMAP ----------------------------------------------------------


def minimal_imap(ci: CiOracle, perm: Permutation) -> Dag:
    """Sparsest DAG consistent with perm under the CI oracle.

    i -> j is present for i before j exactly when the oracle finds i and j
    dependent given the other predecessors of j.
    """
    p = len(perm)
    if not perm.is_complete():
        raise ValueError("incomplete permutation: must cover vertices 0..p-1")
    edges = []
    seen: list[int] = []
    for j in perm:
        for i in seen:
            rest = frozenset(seen) - {i}
            if not ci(i, j, rest):
                edges.append((i, j))
        seen.append(j)
    return Dag(p, edges)


# -- elimination -----------------------------------------------------------


def eliminate(graph: UGraph, order: Sequence[int]) -> tuple[list[UGraph], int]:
    """Eliminate vertices in order, connecting each one's neighbors first.

    Returns the graph after each elimination and the total number of fill
    edges added.
    """
    order = list(order)
    if len(set(order)) != len(order):
        raise ValueError("elimination order has repeats")
    extra = set(order) - graph.vertices
    if extra:
        raise ValueError(f"vertices {sorted(extra)} not in graph")
    adj: dict[int, set[int]] = {v: set(graph.neighbors(v)) for v in graph.vertices}
    stages: list[UGraph] = []
    fill_total = 0
    for k in order:
        nbrs = sorted(adj[k])
        for a, b in combinations(nbrs, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill_total += 1
        for v in nbrs:
            adj[v].discard(k)
        del adj[k]
        edges = {
            undirected_edge(v, u) for v, nb in adj.items() for u in nb
        }
        stages.append(UGraph(adj.keys(), edges))
    return stages, fill_total


def elimination_graph(dag: Dag, vertices: Iterable[int]) -> UGraph:
    """Eliminate everything outside the set from the moral graph of dag.

    The result always contains the moral subgraph on the set but may have
    extra edges: elimination connects neighbor pairs wholesale, while
    marginal dependence can vanish.
    """
    keep = frozenset(vertices)
    for v in keep:
        dag._check_vertex(v)
    drop = sorted(dag.vertices - keep)
    start = moral_graph(dag)
    if not drop:
        return start
    stages, _ = eliminate(start, drop)
    return stages[-1]


# -- serialization ---------------------------------------------------------


def write_dag(dag: Dag, path: str) -> None:
    """Write "p m" then one "i j [w]" line per edge, vertices 1-based."""
    with open(path, "w", encoding="utf-8") as fh:
        _write_dag_file(dag, fh)


def _write_dag_file(dag: Dag, fh: io.TextIOBase) -> None:
    fh.write(f"{dag.p} {dag.edge_count}\n")
    weighted = dag.weights is not None
    for i, j in sorted(dag.edges()):
        if weighted:
            fh.write(f"{i + 1} {j + 1} {dag.weight(i, j)!r}\n")
        else:
            fh.write(f"{i + 1} {j + 1}\n")


def read_dag(path: str) -> Dag:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError("dag file needs a 'p m' header")
    p, m = int(tokens[0]), int(tokens[1])
    body = tokens[2:]
    if len(body) == 3 * m:
        width = 3
    elif len(body) == 2 * m:
        width = 2
    else:
        raise ValueError(f"expected {m} edge lines, found {len(body)} tokens")
    edges = []
    weights: dict[Edge, float] = {}
    for r in range(m):
        chunk = body[r * width : (r + 1) * width]
        i, j = int(chunk[0]) - 1, int(chunk[1]) - 1
        edges.append((i, j))
        if width == 3:
            weights[(i, j)] = float(chunk[2])
    return Dag(p, edges, weights if width == 3 else None)


def write_ugraph(graph: UGraph, path: str) -> None:
    """Write "p m" then one "i j" line per edge, vertices 1-based.

    The graph must live on 0..p-1; subset graphs have no file form.
    """
    p = max(graph.vertices) + 1 if graph.vertices else 0
    if graph.vertices != frozenset(range(p)):
        raise ValueError("only graphs on a full 0..p-1 vertex set are writable")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{p} {graph.edge_count}\n")
        for i, j in sorted(graph.edges()):
            fh.write(f"{i + 1} {j + 1}\n")


def read_ugraph(path: str) -> UGraph:
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError("graph file needs a 'p m' header")
    p, m = int(tokens[0]), int(tokens[1])
    body = tokens[2:]
    if len(body) != 2 * m:
        raise ValueError(f"expected {m} edge lines, found {len(body)} tokens")
    edges = [
        (int(body[2 * r]) - 1, int(body[2 * r + 1]) - 1) for r in range(m)
    ]
    return UGraph(range(p), edges)
