"""Network containers, edge-list ingestion and subnetwork extraction.

Two observation types are supported:

* :class:`UndirectedGraph` -- a simple binary graph (no self-loops), used by
  the stochastic block model and the latent space model.
* :class:`InteractionSequence` -- an ordered list of directed
  ``(sender, receiver)`` interactions, repeats allowed, used by the
  edge-exchangeable model.

Node identifiers are remapped to dense integers ``0..n-1`` at construction;
``node_ids[i]`` holds the external identifier of node ``i``.

Likelihood convention: an undirected graph contributes one Bernoulli term per
unordered dyad ``i < j``.  The ordered-pair product over ``i != j`` squares
every term, i.e. its log-likelihood is exactly twice ours.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Raised for unreadable or malformed edge-list files."""


def _index_ids(node_ids) -> dict:
    index = {}
    for i, nid in enumerate(node_ids):
        if nid in index:
            raise ValueError(f"duplicate node id {nid!r}")
        index[nid] = i
    return index


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Simple undirected graph.

    ``edges`` is an ``(E, 2)`` integer array of unique pairs with
    ``edges[:, 0] < edges[:, 1]``, sorted lexicographically.
    """

    n: int
    edges: np.ndarray
    node_ids: tuple
    dropped_self_loops: int = field(default=0, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(self.node_ids) != self.n:
            raise ValueError("node_ids must have length n")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        canon = np.unique(np.stack([lo, hi], axis=1), axis=0).reshape(-1, 2)
        if len(canon) != len(edges):
            raise ValueError("duplicate edges are not allowed")
        object.__setattr__(self, "edges", canon)
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @classmethod
    def from_adjacency(cls, adj, node_ids=None) -> "UndirectedGraph":
        adj = np.asarray(adj)
        n = adj.shape[0]
        if adj.shape != (n, n) or not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be square and symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("self-loops are not allowed")
        i, j = np.nonzero(np.triu(adj, 1))
        ids = tuple(range(n)) if node_ids is None else tuple(node_ids)
        return cls(n, np.stack([i, j], axis=1), ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict:
        return _index_ids(self.node_ids)

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric ``uint8`` adjacency matrix."""
        adj = np.zeros((self.n, self.n), dtype=np.uint8)
        if self.n_edges:
            adj[self.edges[:, 0], self.edges[:, 1]] = 1
            adj[self.edges[:, 1], self.edges[:, 0]] = 1
        return adj

    def __eq__(self, other):
        if not isinstance(other, UndirectedGraph):
            return NotImplemented
        return (self.n == other.n and self.node_ids == other.node_ids
                and np.array_equal(self.edges, other.edges))

    __hash__ = None

    def __repr__(self):
        return f"UndirectedGraph(n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True, eq=False)
class InteractionSequence:
    """Ordered directed multigraph ``E_m = (S_m, R_m)``, ``m = 1..M``."""

    senders: np.ndarray
    receivers: np.ndarray
    node_ids: tuple

    def __post_init__(self):
        s = np.asarray(self.senders, dtype=np.int64).ravel()
        r = np.asarray(self.receivers, dtype=np.int64).ravel()
        if s.shape != r.shape:
            raise ValueError("senders and receivers must have equal length")
        n = len(self.node_ids)
        if s.size and (min(s.min(), r.min()) < 0 or max(s.max(), r.max()) >= n):
            raise ValueError("interaction references an unknown node")
        object.__setattr__(self, "senders", s)
        object.__setattr__(self, "receivers", r)
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @classmethod
    def from_pairs(cls, pairs) -> "InteractionSequence":
        """Build from ``(sender_id, receiver_id)`` pairs; ids indexed by first appearance."""
        index: dict = {}
        s, r = [], []
        for a, b in pairs:
            s.append(index.setdefault(a, len(index)))
            r.append(index.setdefault(b, len(index)))
        return cls(np.array(s, dtype=np.int64), np.array(r, dtype=np.int64),
                   tuple(index))

    @property
    def M(self) -> int:
        return len(self.senders)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @cached_property
    def index(self) -> dict:
        return _index_ids(self.node_ids)

    def pairs(self):
        ids = self.node_ids
        return [(ids[a], ids[b]) for a, b in zip(self.senders, self.receivers)]

    def __eq__(self, other):
        if not isinstance(other, InteractionSequence):
            return NotImplemented
        return (self.node_ids == other.node_ids
                and np.array_equal(self.senders, other.senders)
                and np.array_equal(self.receivers, other.receivers))

    __hash__ = None

    def __repr__(self):
        return f"InteractionSequence(n={self.n}, M={self.M})"


class LabelVector:
    """Community assignment with values in ``1..K``."""

    __slots__ = ("labels", "K")

    def __init__(self, labels, K: int | None = None):
        lab = np.asarray(labels, dtype=np.int64).ravel()
        if K is None:
            K = int(lab.max()) if lab.size else 1
        if K < 1:
            raise ValueError("K must be >= 1")
        if lab.size and (lab.min() < 1 or lab.max() > K):
            raise ValueError(f"labels must lie in 1..{K}")
        self.labels = lab
        self.K = int(K)

    @classmethod
    def from_zero_based(cls, z, K: int | None = None) -> "LabelVector":
        z = np.asarray(z, dtype=np.int64)
        return cls(z + 1, K if K is not None else (int(z.max()) + 1 if z.size else 1))

    @property
    def zero_based(self) -> np.ndarray:
        return self.labels - 1

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabelVector):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.labels, other.labels)

    __hash__ = None

    def __repr__(self):
        return f"LabelVector(n={len(self.labels)}, K={self.K})"


def load_edge_list(path, mode: str = "undirected"):
    """Read a ``src<sep>dst`` edge list, ``sep`` being a tab or a comma.

    ``mode="undirected"`` returns an :class:`UndirectedGraph` with symmetric
    duplicates merged and self-loops dropped (the drop count is logged and
    kept on ``graph.dropped_self_loops``).  ``mode="directed"`` returns an
    :class:`InteractionSequence` preserving order and multiplicity.
    """
    if mode not in ("directed", "undirected"):
        raise ValueError(f"unknown mode {mode!r}")
    path = Path(path)
    if not path.exists():
        raise EdgeListError(f"{path}: no such file")
    pairs = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split("\t") if "\t" in line else line.split(",")
            parts = [p.strip() for p in parts]
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise EdgeListError(f"{path}:{lineno}: expected 'src<sep>dst', got {raw.rstrip()!r}")
            pairs.append((parts[0], parts[1]))
    if not pairs:
        raise EdgeListError(f"{path}: empty edge list")

    if mode == "directed":
        return InteractionSequence.from_pairs(pairs)

    index: dict = {}
    seen = set()
    loops = 0
    for a, b in pairs:
        ia = index.setdefault(a, len(index))
        ib = index.setdefault(b, len(index))
        if ia == ib:
            loops += 1
            continue
        seen.add((min(ia, ib), max(ia, ib)))
    if loops:
        logger.warning("%s: dropped %d self-loop(s)", path, loops)
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    return UndirectedGraph(len(index), edges, tuple(index), dropped_self_loops=loops)


def write_edge_list(g, path) -> None:
    """Write ``g`` as comma-separated lines using the external node ids."""
    ids = g.node_ids
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        if isinstance(g, InteractionSequence):
            rows = zip(g.senders, g.receivers)
        else:
            rows = g.edges
        for a, b in rows:
            fh.write(f"{ids[a]},{ids[b]}\n")


def _positions(g, nodes) -> np.ndarray:
    index = g.index
    try:
        pos = sorted({index[v] for v in nodes})
    except KeyError as exc:
        raise KeyError(f"unknown node id {exc.args[0]!r}") from None
    return np.asarray(pos, dtype=np.int64)


def induced_subgraph(g, nodes):
    """Restrict ``g`` to ``nodes`` (external ids).

    Edges/interactions with an endpoint outside ``nodes`` are discarded.  The
    result keeps the parent's node order and external ids.
    """
    keep = _positions(g, nodes)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    ids = tuple(g.node_ids[i] for i in keep)
    if isinstance(g, InteractionSequence):
        s, r = remap[g.senders], remap[g.receivers]
        ok = (s >= 0) & (r >= 0)
        return InteractionSequence(s[ok], r[ok], ids)
    e = remap[g.edges] if g.n_edges else g.edges
    ok = (e >= 0).all(axis=1) if g.n_edges else np.zeros(0, dtype=bool)
    return UndirectedGraph(len(keep), e[ok], ids)


def degrees(g, kind: str = "total") -> np.ndarray:
    """Per-node degrees.

    Undirected graphs: incident edge count.  Interaction sequences: ``kind``
    selects sender appearances (``"out"``), receiver appearances (``"in"``)
    or their sum (``"total"``, a self-interaction counting twice).
    """
    if isinstance(g, InteractionSequence):
        out = np.bincount(g.senders, minlength=g.n)
        inn = np.bincount(g.receivers, minlength=g.n)
        return {"out": out, "in": inn, "total": out + inn}[kind]
    if not g.n_edges:
        return np.zeros(g.n, dtype=np.int64)
    return np.bincount(g.edges.ravel(), minlength=g.n)


def crossing_edge_count(g: UndirectedGraph, part) -> int:
    """Number of edges with exactly one endpoint in ``part``."""
    inside = np.zeros(g.n, dtype=bool)
    inside[_positions(g, part)] = True
    if not g.n_edges:
        return 0
    return int(np.sum(inside[g.edges[:, 0]] != inside[g.edges[:, 1]]))


def n_units(g) -> int:
    """Observation count used for minimum-size checks (nodes or interactions)."""
    return g.M if isinstance(g, InteractionSequence) else g.n
