"""Undirected graphs and the local neighborhood decompositions used by the
relaxed estimators.

A graph on ``p`` nodes is stored as a set of canonical edges ``(i, j)`` with
``i < j``.  The *support pair set* of a graph is the set of ordered index
pairs on which a precision matrix with that Markov structure may be nonzero:
every diagonal pair plus both orientations of every edge.

``decompose_neighborhood`` splits a k-hop neighborhood into buffer nodes
(nodes with at least one neighbor outside the neighborhood) and protected
nodes (all others), and builds the relaxed support over which the local
maximum likelihood problem is solved.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path


class Graph:
    """Simple undirected graph with 0-based nodes and canonical edge storage."""

    def __init__(self, p: int, edges) -> None:
        if not isinstance(p, int) or p < 1:
            raise ValueError(f"node count must be a positive integer, got {p!r}")
        canonical = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) is not allowed")
            if not (0 <= i < p and 0 <= j < p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={p}")
            canonical.add((min(i, j), max(i, j)))
        self.p = p
        self.edges = frozenset(canonical)
        adj: list[list[int]] = [[] for _ in range(p)]
        for i, j in canonical:
            adj[i].append(j)
            adj[j].append(i)
        self._adj = tuple(tuple(sorted(nbrs)) for nbrs in adj)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.p == other.p
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.p, self.edges))

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, n_edges={self.n_edges})"


def tilde_edge_set(graph: Graph) -> frozenset[tuple[int, int]]:
    """Support pair set of the graph: all diagonal pairs plus both
    orientations of every edge.

    This is the index set on which a precision matrix that is Markov with
    respect to ``graph`` may be nonzero.
    """
    pairs = {(i, i) for i in range(graph.p)}
    for i, j in graph.edges:
        pairs.add((i, j))
        pairs.add((j, i))
    return frozenset(pairs)


def khop_nodes(graph: Graph, center: int, k: int) -> tuple[int, ...]:
    """Nodes within graph distance ``k`` of ``center``, sorted ascending.

    ``k = 0`` gives the center alone.  Values of ``k`` beyond the
    eccentricity of the center simply saturate at the connected component.
    """
    if not (0 <= center < graph.p):
        raise ValueError(f"center {center} out of range for p={graph.p}")
    if k < 0:
        raise ValueError("hop count must be nonnegative")
    seen = {center}
    frontier = deque([(center, 0)])
    while frontier:
        node, d = frontier.popleft()
        if d == k:
            continue
        for nb in graph.neighbors(node):
            if nb not in seen:
                seen.add(nb)
                frontier.append((nb, d + 1))
    return tuple(sorted(seen))


@dataclass(frozen=True)
class NeighborhoodDecomposition:
    """A k-hop neighborhood split into protected and buffer nodes.

    All index sets are in global node indices.  ``local_index`` maps a
    global node index to its position within the sorted ``nodes`` tuple,
    which is the indexing used when the covariance block for the
    neighborhood is extracted.

    ``relaxed_edges`` is the support over which the local problem is
    solved: the support pairs among protected-protected and
    protected-buffer positions, plus the complete block over buffer nodes.
    ``row_params`` lists the support pairs owned by the center row; those
    are the entries the center node contributes to the aggregated global
    estimate.
    """

    center: int
    hops: int
    nodes: tuple[int, ...]
    buffer: frozenset[int]
    protected: frozenset[int]
    protected_edges: frozenset[tuple[int, int]]
    relaxed_edges: frozenset[tuple[int, int]]
    row_params: tuple[tuple[int, int], ...]
    local_index: dict[int, int] = field(hash=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def to_local(self, pairs) -> frozenset[tuple[int, int]]:
        """Map a set of global index pairs into local block indices."""
        li = self.local_index
        return frozenset((li[a], li[b]) for a, b in pairs)

    @property
    def relaxed_local(self) -> frozenset[tuple[int, int]]:
        return self.to_local(self.relaxed_edges)

    def is_saturated(self, graph: Graph) -> bool:
        """True when the relaxed support is the full support pair set over
        the whole graph, i.e. the local problem equals the global one."""
        return len(self.nodes) == graph.p and self.relaxed_edges == tilde_edge_set(graph)


def decompose_neighborhood(graph: Graph, center: int, hops: int) -> NeighborhoodDecomposition:
    """Build the k-hop neighborhood decomposition around ``center``.

    Buffer nodes are the members of the neighborhood with at least one
    neighbor outside it; protected nodes are the rest.  The center is
    always protected for ``hops >= 1``, as is every node at distance
    strictly less than ``hops``.
    """
    if hops < 1:
        raise ValueError("neighborhood decomposition requires hops >= 1")
    nodes = khop_nodes(graph, center, hops)
    node_set = set(nodes)
    buffer = frozenset(
        j for j in nodes if any(nb not in node_set for nb in graph.neighbors(j))
    )
    protected = frozenset(node_set - buffer)

    prot_edges = set()
    for a in protected:
        prot_edges.add((a, a))
    for a, b in graph.edges:
        if a in node_set and b in node_set and not (a in buffer and b in buffer):
            prot_edges.add((a, b))
            prot_edges.add((b, a))

    relaxed = set(prot_edges)
    buf = sorted(buffer)
    for a in buf:
        for b in buf:
            relaxed.add((a, b))

    row = [(center, center)] + [(center, j) for j in graph.neighbors(center)]
    local_index = {node: pos for pos, node in enumerate(nodes)}
    return NeighborhoodDecomposition(
        center=center,
        hops=hops,
        nodes=nodes,
        buffer=buffer,
        protected=protected,
        protected_edges=frozenset(prot_edges),
        relaxed_edges=frozenset(relaxed),
        row_params=tuple(row),
        local_index=local_index,
    )


def write_edge_list(graph: Graph, path) -> None:
    """Serialize a graph: first line ``<p> <edge count>``, then one ``i j``
    line per canonical edge."""
    lines = [f"{graph.p} {graph.n_edges}"]
    lines += [f"{i} {j}" for i, j in sorted(graph.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"{path}: empty edge-list file")
    head = text[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: expected first line '<p> <edge count>'")
    p, count = int(head[0]), int(head[1])
    edges = []
    for line in text[1:]:
        line = line.strip()
        if not line:
            continue
        i, j = line.split()
        edges.append((int(i), int(j)))
    if len(edges) != count:
        raise ValueError(
            f"{path}: header announces {count} edges but file has {len(edges)}"
        )
    return Graph(p, edges)
