"""Graph data model, file I/O and induced-subgraph primitives.

Graphs are undirected and simple: no self-loops, no duplicate edges, no
edge weights. Node ids from input files are remapped to dense 0..n-1;
the original labels are kept on the graph for output.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphParseError, InvalidNodeSetError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph with dense node features.

    neighbors[v] is a sorted tuple of the neighbors of v, features is an
    (n, p) float array (p == 0 means featureless).
    """

    neighbors: tuple
    features: np.ndarray
    node_ids: tuple | None = None
    _nbr_sets: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._nbr_sets is None:
            object.__setattr__(
                self, "_nbr_sets", tuple(frozenset(nb) for nb in self.neighbors)
            )

    @property
    def n(self):
        return len(self.neighbors)

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def num_edges(self):
        return sum(len(nb) for nb in self.neighbors) // 2

    def degree(self, v):
        return len(self.neighbors[v])

    def has_edge(self, u, v):
        return v in self._nbr_sets[u]

    def edges(self):
        for u, nb in enumerate(self.neighbors):
            for v in nb:
                if u < v:
                    yield (u, v)

    def induced(self, nodes) -> "Graph":
        """Induced subgraph on the given nodes, remapped to 0..len-1."""
        nodes = sorted(nodes)
        pos = {v: i for i, v in enumerate(nodes)}
        if len(pos) != len(nodes):
            raise InvalidNodeSetError("duplicate nodes in induced-subgraph set")
        nbrs = []
        for v in nodes:
            nbrs.append(tuple(pos[w] for w in self.neighbors[v] if w in pos))
        feats = self.features[nodes] if self.p else np.zeros((len(nodes), 0))
        ids = tuple(self.node_ids[v] for v in nodes) if self.node_ids else None
        return Graph(tuple(nbrs), np.asarray(feats, dtype=float), ids)

    def with_features(self, features) -> "Graph":
        features = np.asarray(features, dtype=float)
        if features.shape[0] != self.n or not np.all(np.isfinite(features)):
            raise InvalidNodeSetError("replacement features wrong shape or non-finite")
        return Graph(self.neighbors, features, self.node_ids)


@dataclass(frozen=True)
class Motif:
    """A sorted k-node set with its induced adjacency and feature rows."""

    nodes: tuple
    adj_k: np.ndarray
    feat_k: np.ndarray

    @property
    def k(self):
        return len(self.nodes)


def build_graph(n, edges, features=None, node_ids=None) -> Graph:
    """Assemble a Graph from an iterable of (u, v) pairs.

    Deduplicates, drops self-loops (logged), symmetrizes.
    """
    nbr_sets = [set() for _ in range(n)]
    dropped = 0
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidNodeSetError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            dropped += 1
            continue
        nbr_sets[u].add(v)
        nbr_sets[v].add(u)
    if dropped:
        logger.info("dropped %d self-loop edge(s)", dropped)
    if features is None:
        features = np.zeros((n, 0))
    features = np.asarray(features, dtype=float)
    if features.shape[0] != n:
        raise InvalidNodeSetError(
            f"feature matrix has {features.shape[0]} rows for {n} nodes"
        )
    if features.size and not np.all(np.isfinite(features)):
        raise InvalidNodeSetError("features contain non-finite values")
    return Graph(
        tuple(tuple(sorted(s)) for s in nbr_sets),
        features,
        tuple(node_ids) if node_ids is not None else None,
    )


def _sort_key(label):
    try:
        return (0, int(label), label)
    except ValueError:
        return (1, 0, label)


def load_graph(edge_list_path, feature_path=None) -> Graph:
    """Load a graph from a whitespace edge list and an optional feature CSV.

    Edge list: one "u v" pair per line, '#' starts a comment. Feature CSV:
    first column node id, remaining columns real-valued; ids present only
    in the feature file become isolated nodes.
    """
    raw_edges = []
    labels = set()
    with open(edge_list_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError(
                    f"expected 'u v', got {line!r}", line_number=lineno
                )
            raw_edges.append((parts[0], parts[1]))
            labels.update(parts)

    feat_rows = {}
    p = 0
    if feature_path is not None:
        with open(feature_path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                cells = line.split(",")
                node = cells[0].strip()
                try:
                    row = [float(c) for c in cells[1:]]
                except ValueError as exc:
                    raise GraphParseError(str(exc), line_number=lineno) from exc
                if node in feat_rows:
                    raise GraphParseError(
                        f"duplicate feature row for node {node!r}", line_number=lineno
                    )
                if feat_rows and len(row) != p:
                    raise GraphParseError(
                        f"inconsistent feature width ({len(row)} vs {p})",
                        line_number=lineno,
                    )
                p = len(row)
                feat_rows[node] = row
        missing = labels - feat_rows.keys()
        if missing:
            raise GraphParseError(
                f"{len(missing)} node(s) in the edge list have no feature row, "
                f"e.g. {sorted(missing)[0]!r}"
            )
        labels.update(feat_rows)

    ordered = sorted(labels, key=_sort_key)
    index = {lab: i for i, lab in enumerate(ordered)}
    edges = [(index[u], index[v]) for u, v in raw_edges]
    features = None
    if feature_path is not None:
        features = np.array([feat_rows[lab] for lab in ordered], dtype=float)
    return build_graph(len(ordered), edges, features=features, node_ids=ordered)


def induced_subgraph(g: Graph, C) -> Motif:
    """The motif induced by the k-node set C (order of C is irrelevant)."""
    nodes = tuple(sorted(C))
    k = len(nodes)
    if len(set(nodes)) != k or k < 1:
        raise InvalidNodeSetError(f"invalid node set {C!r}")
    if nodes[0] < 0 or nodes[-1] >= g.n:
        raise InvalidNodeSetError(f"node set {C!r} out of range for n={g.n}")
    adj = np.zeros((k, k), dtype=bool)
    for i in range(k):
        nb = g._nbr_sets[nodes[i]]
        for j in range(i + 1, k):
            if nodes[j] in nb:
                adj[i, j] = adj[j, i] = True
    feat = g.features[list(nodes)] if g.p else np.zeros((k, 0))
    return Motif(nodes, adj, np.asarray(feat, dtype=float))


def is_connected(m: Motif) -> bool:
    """True iff the motif's induced subgraph is connected."""
    k = m.k
    if k == 1:
        return True
    seen = 1  # bitmask over motif-local indices
    stack = [0]
    adj = m.adj_k
    while stack:
        v = stack.pop()
        for w in range(k):
            if adj[v, w] and not (seen >> w) & 1:
                seen |= 1 << w
                stack.append(w)
    return seen == (1 << k) - 1


def nodes_connected(g: Graph, nodes) -> bool:
    """Connectivity of the subgraph induced by `nodes`, without building a Motif."""
    nodes = tuple(nodes)
    k = len(nodes)
    if k == 1:
        return True
    pos = {v: i for i, v in enumerate(nodes)}
    seen = 1
    stack = [nodes[0]]
    while stack:
        v = stack.pop()
        for w in g.neighbors[v]:
            i = pos.get(w)
            if i is not None and not (seen >> i) & 1:
                seen |= 1 << i
                stack.append(w)
    return seen == (1 << k) - 1
