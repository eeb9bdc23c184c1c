"""Directed graphs, random DAGs, edge-node-edge motif labels and vote aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

N_CLASSES = 9

# relation codes for an ordered pair (a, b)
NONE, FORWARD, BACKWARD = 0, 1, 2


@dataclass
class DirectedGraph:
    adj: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency must be binary")
        self.adj = adj.astype(np.int8)
        if np.any(np.diag(self.adj)):
            raise ValueError("self-loops are not allowed")
        if not self.names:
            self.names = [f"x{i}" for i in range(self.d)]
        elif len(self.names) != self.d:
            raise ValueError(f"{len(self.names)} names for {self.d} nodes")
        self.names = [str(n) for n in self.names]

    @property
    def d(self) -> int:
        return self.adj.shape[0]

    @classmethod
    def empty(cls, d: int) -> "DirectedGraph":
        return cls(np.zeros((d, d), dtype=np.int8))

    @classmethod
    def from_edges(cls, d: int, edges, names=None) -> "DirectedGraph":
        adj = np.zeros((d, d), dtype=np.int8)
        for a, b in edges:
            adj[a, b] = 1
        return cls(adj, list(names) if names else [])

    def edges(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(*np.nonzero(self.adj))]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.adj[:, j])

    def topological_order(self) -> list[int] | None:
        """Kahn's algorithm; None when the graph has a cycle."""
        indeg = self.adj.sum(axis=0).astype(int)
        queue = [v for v in range(self.d) if indeg[v] == 0]
        order = []
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w in np.flatnonzero(self.adj[v]):
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(int(w))
        return order if len(order) == self.d else None

    def is_acyclic(self) -> bool:
        return self.topological_order() is not None

    def to_json_dict(self) -> dict:
        return {"d": self.d, "names": list(self.names), "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DirectedGraph":
        try:
            d = int(obj["d"])
            edges = [(int(a), int(b)) for a, b in obj["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed graph JSON: {exc}") from exc
        for a, b in edges:
            if not (0 <= a < d and 0 <= b < d):
                raise ValueError(f"edge ({a}, {b}) out of range for d={d}")
        return cls.from_edges(d, edges, obj.get("names") or None)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DirectedGraph":
        return cls.from_json_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.adj, other.adj)


def sample_random_dag(d: int, edge_prob: float, seed) -> DirectedGraph:
    """Random DAG: shuffle nodes, then keep each forward pair with probability edge_prob."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d)
    upper = np.triu(rng.random((d, d)) < edge_prob, k=1)
    adj = np.zeros((d, d), dtype=np.int8)
    adj[np.ix_(perm, perm)] = upper
    return DirectedGraph(adj)


class TripletIndex(NamedTuple):
    """Center j with an unordered outer pair stored as i < k."""

    i: int
    j: int
    k: int

    @classmethod
    def make(cls, i: int, j: int, k: int) -> "TripletIndex":
        if len({i, j, k}) != 3:
            raise ValueError(f"triplet indices must be distinct, got {(i, j, k)}")
        if not i < k:
            raise ValueError(f"outer pair must satisfy i < k, got i={i}, k={k}")
        return cls(i, j, k)


def relation(adj: np.ndarray, a: int, b: int) -> int:
    ab, ba = adj[a, b], adj[b, a]
    if ab and ba:
        raise ValueError(f"pair ({a}, {b}) is bidirected and has no motif relation")
    return FORWARD if ab else BACKWARD if ba else NONE


def encode(r_ij: int, r_jk: int) -> int:
    return 3 * r_ij + r_jk


def decode(cls: int) -> tuple[int, int]:
    if not 0 <= cls < N_CLASSES:
        raise ValueError(f"motif class out of range: {cls}")
    return cls // 3, cls % 3


def _flip(r: int) -> int:
    return (0, 2, 1)[r]


def mirror_class(cls: int) -> int:
    """Class of the same triplet read with the outer nodes swapped."""
    r1, r2 = decode(cls)
    return encode(_flip(r2), _flip(r1))


def ordered_label(adj: np.ndarray, a: int, j: int, b: int) -> int:
    """Label for the ordered triple (a, j, b) without the canonical-order check."""
    return encode(relation(adj, a, j), relation(adj, j, b))


def motif_label(g: DirectedGraph, t: TripletIndex) -> int:
    d = g.d
    for v in t:
        if not 0 <= v < d:
            raise IndexError(f"node index {v} out of range for d={d}")
    return ordered_label(g.adj, t.i, t.j, t.k)


def n_triplets(d: int) -> int:
    return d * comb(d - 1, 2)


def enumerate_triplets(d: int, max_count: int | None = None, seed=0) -> list[TripletIndex]:
    if d < 3:
        raise ValueError("graph too small for triplets")
    full = [
        TripletIndex(i, j, k)
        for j in range(d)
        for i in range(d)
        for k in range(i + 1, d)
        if i != j and k != j
    ]
    if max_count is None or len(full) <= max_count:
        return full
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(full), size=max_count, replace=False))
    return [full[n] for n in keep]


# slot membership of each class: columns are (none, forward, backward)
SLOT1 = np.array([[1.0 if c // 3 == r else 0.0 for r in range(3)] for c in range(N_CLASSES)])
SLOT2 = np.array([[1.0 if c % 3 == r else 0.0 for r in range(3)] for c in range(N_CLASSES)])


def slot_probabilities(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Marginal (none, forward, backward) probabilities of both slots, per row."""
    probs = np.atleast_2d(probs)
    return probs @ SLOT1, probs @ SLOT2


class VoteBoard:
    """Per-direction soft edge evidence accumulated from triplet predictions."""

    def __init__(self, d: int):
        self.d = d
        self.evidence = np.zeros((d, d))
        self.counts = np.zeros((d, d))

    def add(self, a: int, b: int, p: float):
        if p < 0:
            raise ValueError("evidence must be non-negative")
        self.evidence[a, b] += p
        self.counts[a, b] += 1

    def add_triplets(self, triplets: Sequence[TripletIndex], probs: np.ndarray):
        """Accumulate evidence for the (i, j) and (j, k) slots of every triplet."""
        tri = np.asarray(triplets, dtype=int).reshape(-1, 3)
        probs = np.atleast_2d(np.asarray(probs, dtype=float))
        if len(tri) != len(probs):
            raise ValueError(f"{len(tri)} triplets but {len(probs)} predictions")
        s1, s2 = slot_probabilities(probs)
        i, j, k = tri.T
        for (a, b), p in (
            ((i, j), s1[:, FORWARD]),
            ((j, i), s1[:, BACKWARD]),
            ((j, k), s2[:, FORWARD]),
            ((k, j), s2[:, BACKWARD]),
        ):
            np.add.at(self.evidence, (a, b), np.maximum(p, 0.0))
            np.add.at(self.counts, (a, b), 1.0)

    def mean_evidence(self) -> np.ndarray:
        m = np.zeros_like(self.evidence)
        seen = self.counts > 0
        m[seen] = self.evidence[seen] / self.counts[seen]
        return m


def aggregate_votes(board: VoteBoard, threshold: float = 0.35, names=None) -> DirectedGraph:
    m = board.mean_evidence()
    adj = (m > threshold) & (m > m.T)
    np.fill_diagonal(adj, False)
    return DirectedGraph(adj.astype(np.int8), list(names) if names else [])
