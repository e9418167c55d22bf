"""Graphs of firms, canonical topologies, and the degree-driven probabilities.

Everything dynamic in the package is driven by node degrees: new firms attach
to existing ones in proportion to degree, and existing firms exit with
probability inversely proportional to degree.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DomainError,
    EmptySupportError,
    GraphError,
    InvalidSizeError,
)

NodeId = Hashable

BASIC_KINDS = ("cycle", "star", "path", "complete")


@dataclass(frozen=True)
class Graph:
    """Immutable weighted graph.

    ``edges`` holds ``(src, dst, weight)`` triples. Undirected graphs store
    each edge once; the degree of a node counts its incident edges (in plus
    out for directed graphs).
    """

    nodes: tuple
    edges: tuple = ()
    directed: bool = False

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple((u, v, float(w)) for u, v, w in self.edges)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node identifiers")
        known = set(nodes)
        seen = set()
        for u, v, w in edges:
            if u not in known or v not in known:
                raise GraphError(f"edge ({u!r}, {v!r}) references an unknown node")
            if u == v:
                raise GraphError(f"self-loop on node {u!r}")
            if not math.isfinite(w) or w < 0:
                raise GraphError(f"edge ({u!r}, {v!r}) has invalid weight {w}")
            key = (u, v) if self.directed else frozenset((u, v))
            if key in seen:
                raise GraphError(f"duplicate edge ({u!r}, {v!r})")
            seen.add(key)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def index(self) -> dict:
        return {node: i for i, node in enumerate(self.nodes)}

    @cached_property
    def degree_array(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v, _ in self.edges:
            deg[self.index[u]] += 1
            deg[self.index[v]] += 1
        return deg

    def degrees(self) -> dict:
        return dict(zip(self.nodes, self.degree_array.tolist()))

    def adjacency_matrix(self, weighted: bool = True) -> np.ndarray:
        """Dense matrix in node order; symmetric for undirected graphs."""
        mat = np.zeros((self.n, self.n))
        for u, v, w in self.edges:
            i, j = self.index[u], self.index[v]
            val = w if weighted else 1.0
            mat[i, j] = val
            if not self.directed:
                mat[j, i] = val
        return mat

    def with_weight(self, weight: float) -> "Graph":
        return Graph(self.nodes, [(u, v, weight) for u, v, _ in self.edges], self.directed)

    def remove_nodes(self, doomed: Iterable[NodeId]) -> "Graph":
        doomed = set(doomed)
        return Graph(
            [x for x in self.nodes if x not in doomed],
            [e for e in self.edges if e[0] not in doomed and e[1] not in doomed],
            self.directed,
        )

    @classmethod
    def from_adjacency(cls, matrix, nodes: Sequence | None = None, directed: bool | None = None) -> "Graph":
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise GraphError("adjacency matrix must be square")
        n = mat.shape[0]
        nodes = list(range(1, n + 1)) if nodes is None else list(nodes)
        if directed is None:
            directed = not np.allclose(mat, mat.T)
        edges = []
        for i in range(n):
            for j in range(n) if directed else range(i + 1, n):
                if mat[i, j] != 0:
                    edges.append((nodes[i], nodes[j], mat[i, j]))
        return cls(nodes, edges, directed)


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-node probabilities.

    With ``scaled=True`` the entries are per-node rates (a pmf multiplied by
    an overall rate) and need not sum to one.
    """

    entries: Mapping
    scaled: bool = False

    def __post_init__(self):
        vals = np.fromiter(self.entries.values(), dtype=float, count=len(self.entries))
        if np.any(vals < 0) or np.any(vals > 1):
            raise DomainError("probabilities must lie in [0, 1]")
        if not self.scaled and abs(vals.sum() - 1.0) > 1e-12:
            raise DegenerateDistributionError(f"entries sum to {vals.sum()!r}, not 1")

    def __getitem__(self, node):
        return self.entries[node]

    def __len__(self):
        return len(self.entries)

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def as_array(self, nodes: Sequence) -> np.ndarray:
        return np.array([self.entries.get(x, 0.0) for x in nodes], dtype=float)

    def argmax(self):
        return max(self.entries, key=self.entries.__getitem__)


@dataclass(frozen=True)
class DegreeStats:
    mean_degree: float
    heterogeneity: float
    delta: float
    histogram: dict = field(default_factory=dict)


def generate_basic(kind: str, n: int, directed: bool = False, weight: float = 1.0) -> Graph:
    """Build a cycle, star, path or complete graph on nodes ``1..n``.

    The star's center is node 1. Directed variants orient cycle and path
    edges along increasing labels and star edges away from the center;
    the directed complete graph carries both arcs of every pair.
    """
    if kind not in BASIC_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {BASIC_KINDS}")
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidSizeError(f"{kind} graph needs n >= 2, got {n!r}")
    nodes = list(range(1, n + 1))
    if kind == "cycle":
        pairs = [(i, i % n + 1) for i in nodes] if n > 2 or directed else [(1, 2)]
    elif kind == "path":
        pairs = [(i, i + 1) for i in range(1, n)]
    elif kind == "star":
        pairs = [(1, i) for i in range(2, n + 1)]
    else:
        pairs = [(i, j) for i in nodes for j in nodes if i < j]
        if directed:
            pairs += [(j, i) for i, j in pairs]
    return Graph(nodes, [(u, v, weight) for u, v in pairs], directed)


def attachment_distribution(g: Graph) -> ProbabilityVector:
    """Preferential attachment: p_i = k_i / sum_j k_j."""
    deg = g.degree_array.astype(float)
    total = deg.sum()
    if total <= 0:
        raise DegenerateDistributionError("graph has no edges, attachment mass is zero")
    return ProbabilityVector(dict(zip(g.nodes, (deg / total).tolist())))


def deletion_distribution(g: Graph, rate: float = 1.0, protected: Iterable = ()) -> ProbabilityVector:
    """Exit probabilities inversely proportional to degree, scaled by ``rate``.

    Protected nodes and isolated nodes get zero. The returned vector is a
    normalized pmf only when ``rate == 1``.
    """
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"deletion rate must be in [0, 1], got {rate}")
    protected = set(protected)
    deg = g.degree_array
    support = [i for i, node in enumerate(g.nodes) if node not in protected]
    if not support:
        raise EmptySupportError("every node is protected from deletion")
    isolated = [g.nodes[i] for i in support if deg[i] == 0]
    if isolated:
        warnings.warn(
            f"{len(isolated)} zero-degree node(s) excluded from the deletion support",
            RuntimeWarning,
            stacklevel=2,
        )
    support = [i for i in support if deg[i] > 0]
    if not support:
        raise EmptySupportError("no deletable node with positive degree")

    inv = np.zeros(g.n)
    inv[support] = 1.0 / deg[support]
    probs = rate * inv / inv.sum()
    return ProbabilityVector(dict(zip(g.nodes, probs.tolist())), scaled=rate != 1.0)


def degree_stats(g: Graph) -> DegreeStats:
    if g.n == 0:
        raise InvalidSizeError("degree statistics of an empty graph")
    hist = dict(sorted(Counter(g.degree_array.tolist()).items()))
    ks = np.array(list(hist), dtype=float)
    pk = np.array(list(hist.values()), dtype=float) / g.n
    mean = float(ks @ pk)
    delta = float(pk @ np.abs(ks[:, None] - ks[None, :]) @ pk)
    het = delta / mean if mean > 0 else 0.0
    return DegreeStats(mean_degree=mean, heterogeneity=het, delta=delta, histogram=hist)


# -- serialization ----------------------------------------------------------


def _coerce_id(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def graph_to_dict(g: Graph) -> dict:
    return {
        "nodes": list(g.nodes),
        "edges": [[u, v, w] for u, v, w in g.edges],
        "directed": g.directed,
    }


def graph_from_dict(doc: Mapping) -> Graph:
    try:
        nodes = doc["nodes"]
        edges = doc["edges"]
    except KeyError as exc:
        raise GraphError(f"graph document is missing field {exc}") from None
    parsed = []
    for e in edges:
        if isinstance(e, Mapping):
            parsed.append((e["src"], e["dst"], e.get("weight", 1.0)))
        elif len(e) == 2:
            parsed.append((e[0], e[1], 1.0))
        else:
            parsed.append(tuple(e))
    return Graph(nodes, parsed, bool(doc.get("directed", False)))


def save_graph(g: Graph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2) + "\n")


def load_graph(path) -> Graph:
    """Read a graph from ``.json`` or from an edge-list ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_edge_csv(path)
    return graph_from_dict(json.loads(path.read_text()))


def read_edge_csv(path, directed: bool = False) -> Graph:
    """Edge list with header ``src,dst,weight``. Isolated nodes cannot be expressed."""
    nodes: dict = {}
    edges = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"src", "dst"} <= set(reader.fieldnames):
            raise GraphError("edge CSV needs a header with src,dst[,weight]")
        for row in reader:
            u, v = _coerce_id(row["src"]), _coerce_id(row["dst"])
            nodes.setdefault(u, None)
            nodes.setdefault(v, None)
            edges.append((u, v, float(row.get("weight") or 1.0)))
    return Graph(list(nodes), edges, directed)


def write_edge_csv(g: Graph, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        for u, v, w in g.edges:
            writer.writerow([u, v, repr(w)])
