"""
Simple undirected graphs stored as dense boolean adjacency matrices.

Vertex pairs (i, j) with i < j are indexed row-major, so for n = 3 the pairs
(0,1), (0,2), (1,2) have linear indices 0, 1, 2.  Subgraph statistics are raw
counts: edges E, two-stars S2 and triangles T.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

STATISTICS = ("edges", "two_stars", "triangles")


class InvalidPairError(ValueError):
    pass


class DimensionError(ValueError):
    pass


def validate_statistics(stats: Iterable[str]) -> tuple[str, ...]:
    """Normalise a statistic selection to the canonical (E, S2, T) order."""
    stats = tuple(stats)
    if not stats:
        raise ValueError("statistic selection is empty")
    unknown = set(stats) - set(STATISTICS)
    if unknown:
        raise ValueError(f"unknown statistics: {sorted(unknown)}")
    return tuple(s for s in STATISTICS if s in stats)


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


@dataclass(frozen=True)
class VertexPair:
    i: int
    j: int
    linear_index: int


def edge_index(i: int, j: int, n: int) -> VertexPair:
    """Canonical row-major index of the pair (i, j), i < j, among all pairs."""
    if not (0 <= i < j < n):
        raise InvalidPairError(f"invalid vertex pair ({i}, {j}) for n={n}")
    idx = i * n - i * (i + 1) // 2 + (j - i - 1)
    return VertexPair(i, j, idx)


def pair_from_index(idx: int, n: int) -> VertexPair:
    """Inverse of :func:`edge_index`."""
    N = num_pairs(n)
    if not (0 <= idx < N):
        raise InvalidPairError(f"pair index {idx} out of range for n={n}")
    rows = np.arange(n - 1)
    offsets = rows * n - rows * (rows + 1) // 2
    i = int(np.searchsorted(offsets, idx, side="right")) - 1
    j = idx - int(offsets[i]) + i + 1
    return VertexPair(i, j, idx)


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column arrays of all pairs in canonical order."""
    return np.triu_indices(n, k=1)


class Graph:
    """
    Simple undirected graph on ``n`` vertices.

    ``adjacency`` is a symmetric boolean matrix with an empty diagonal and
    ``degrees`` is kept in sync with it.  Public operations return new graphs;
    :meth:`set_edge` mutates in place and is meant for single-owner chains.
    """

    __slots__ = ("n", "adjacency", "degrees")

    def __init__(self, adjacency: np.ndarray, _trusted: bool = False):
        adj = np.asarray(adjacency)
        if not _trusted:
            if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
                raise DimensionError("adjacency must be a square matrix")
            adj = adj.astype(bool, copy=True)
            if adj.shape[0] < 1:
                raise ValueError("graph needs at least one vertex")
            if not np.array_equal(adj, adj.T):
                raise ValueError("adjacency must be symmetric")
            if adj.diagonal().any():
                raise ValueError("self-loops are not allowed")
        self.n = adj.shape[0]
        self.adjacency = adj
        self.degrees = adj.sum(axis=1, dtype=np.int64)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=bool), _trusted=True)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        adj = ~np.eye(n, dtype=bool)
        return cls(adj, _trusted=True)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InvalidPairError(f"invalid edge ({u}, {v}) for n={n}")
            adj[u, v] = adj[v, u] = True
        return cls(adj, _trusted=True)

    @classmethod
    def from_vector(cls, n: int, x: np.ndarray) -> "Graph":
        """Build from the length-N edge indicator vector in canonical order."""
        x = np.asarray(x).astype(bool)
        if x.shape != (num_pairs(n),):
            raise DimensionError("indicator vector has wrong length")
        adj = np.zeros((n, n), dtype=bool)
        r, c = pair_arrays(n)
        adj[r, c] = x
        adj[c, r] = x
        return cls(adj, _trusted=True)

    @classmethod
    def erdos_renyi(cls, n: int, p: float, rng: np.random.Generator) -> "Graph":
        return cls.from_vector(n, rng.random(num_pairs(n)) < p)

    @property
    def num_pairs(self) -> int:
        return num_pairs(self.n)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def to_vector(self) -> np.ndarray:
        r, c = pair_arrays(self.n)
        return self.adjacency[r, c].copy()

    def edges(self) -> list[tuple[int, int]]:
        r, c = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(r.tolist(), c.tolist()))

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g.adjacency = self.adjacency.copy()
        g.degrees = self.degrees.copy()
        return g

    def set_edge(self, i: int, j: int, value: bool) -> bool:
        """Set indicator (i, j) in place; return True if it changed."""
        old = self.adjacency[i, j]
        if old == value:
            return False
        self.adjacency[i, j] = self.adjacency[j, i] = value
        step = 1 if value else -1
        self.degrees[i] += step
        self.degrees[j] += step
        return True

    def flip(self, s: VertexPair) -> "Graph":
        return flip_edge(self, s)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex v renamed to perm[v]."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return Graph(self.adjacency[np.ix_(inv, inv)], _trusted=True)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.n, np.packbits(self.adjacency).tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def flip_edge(g: Graph, s: VertexPair) -> Graph:
    """Copy of ``g`` with the indicator at ``s`` toggled."""
    out = g.copy()
    out.set_edge(s.i, s.j, not g.adjacency[s.i, s.j])
    return out


def count_statistics(g: Graph, stats: Iterable[str] = STATISTICS) -> np.ndarray:
    stats = validate_statistics(stats)
    out = []
    for name in stats:
        if name == "edges":
            out.append(g.num_edges)
        elif name == "two_stars":
            d = g.degrees
            out.append(int((d * (d - 1) // 2).sum()))
        else:
            a = g.adjacency.astype(np.int64)
            out.append(int(np.einsum("ij,jk,ki->", a, a, a)) // 6)
    return np.array(out, dtype=np.int64)


def change_statistics(g: Graph, s: VertexPair, stats: Iterable[str] = STATISTICS) -> np.ndarray:
    """
    t(x with s present) - t(x with s absent) for the selected statistics.

    The value does not depend on the current indicator at s.
    """
    stats = validate_statistics(stats)
    i, j = s.i, s.j
    a = g.adjacency
    out = []
    for name in stats:
        if name == "edges":
            out.append(1)
        elif name == "two_stars":
            out.append(int(g.degrees[i] + g.degrees[j]) - 2 * int(a[i, j]))
        else:
            # i and j are never common neighbours of themselves (no self-loops)
            out.append(int(np.count_nonzero(a[i] & a[j])))
    return np.array(out, dtype=np.int64)


def change_statistics_matrix(g: Graph, stats: Iterable[str] = STATISTICS) -> np.ndarray:
    """Change statistics of every pair, shape (N, L) in canonical pair order."""
    stats = validate_statistics(stats)
    r, c = pair_arrays(g.n)
    cols = []
    for name in stats:
        if name == "edges":
            cols.append(np.ones(len(r), dtype=np.int64))
        elif name == "two_stars":
            d = g.degrees
            cols.append(d[r] + d[c] - 2 * g.adjacency[r, c].astype(np.int64))
        else:
            a = g.adjacency.astype(np.float64)
            common = a @ a
            cols.append(np.rint(common[r, c]).astype(np.int64))
    return np.stack(cols, axis=1)


def hamming(g1: Graph, g2: Graph) -> int:
    if g1.n != g2.n:
        raise DimensionError(f"vertex counts differ: {g1.n} vs {g2.n}")
    return int(np.count_nonzero(g1.adjacency != g2.adjacency)) // 2


def read_edgelist(path, n: int | None = None, infer_n: bool = True) -> Graph:
    """
    Read a whitespace-separated, 0-indexed edge list.

    Lines starting with ``#`` are comments.  A header line ``n <count>`` fixes
    the vertex count; otherwise ``n`` (argument) or max index + 1 is used.
    """
    edges = []
    header_n = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "n":
                header_n = int(parts[1])
                continue
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v'")
            edges.append((int(parts[0]), int(parts[1])))
    if header_n is not None:
        n = header_n
    elif n is None:
        if not infer_n:
            raise ValueError(f"{path}: no vertex count header and inference disabled")
        n = max((max(e) for e in edges), default=-1) + 1
    return Graph.from_edges(n, edges)


def write_edgelist(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"n {g.n}\n")
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")
