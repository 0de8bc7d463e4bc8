"""
Relative-frequency estimates of the conditional edge probability.

For every vertex pair s the key u = delta_s t(x) is computed, and the table
records N_u (pairs with that key) and n_u (those pairs that are edges), so
that q_hat(u) = n_u / N_u.  Several graphs on the same vertex count can be
pooled.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from .graph import (
    Graph,
    VertexPair,
    change_statistics_matrix,
    validate_statistics,
)


class ConditionalTable:
    """
    Mapping from change-statistic key to (n_u, N_u).

    Unseen keys are answered by the nearest observed key in L1 distance, ties
    going to the lexicographically smaller key; ``unseen="zero"`` returns 0
    instead.  An empty table answers with ``fallback_density``.
    """

    def __init__(self, statistics, n: int, unseen: str = "nearest"):
        self.statistics = validate_statistics(statistics)
        self.n = n
        if unseen not in ("nearest", "zero"):
            raise ValueError("unseen must be 'nearest' or 'zero'")
        self.unseen = unseen
        self.entries: dict[tuple[int, ...], list[int]] = {}
        self.total_edges = 0
        self.total_pairs = 0
        self._key_array = None

    @property
    def fallback_density(self) -> float:
        return self.total_edges / self.total_pairs if self.total_pairs else 0.0

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConditionalTable):
            return NotImplemented
        return (
            self.statistics == other.statistics
            and self.entries == other.entries
            and self.total_edges == other.total_edges
            and self.total_pairs == other.total_pairs
        )

    def copy(self) -> "ConditionalTable":
        t = ConditionalTable(self.statistics, self.n, self.unseen)
        t.entries = {k: list(v) for k, v in self.entries.items()}
        t.total_edges = self.total_edges
        t.total_pairs = self.total_pairs
        return t

    def counts(self, key) -> tuple[int, int]:
        n_u, N_u = self.entries.get(tuple(int(v) for v in key), (0, 0))
        return n_u, N_u

    def _add(self, keys: np.ndarray, present: np.ndarray, sign: int) -> None:
        for key, x in zip(map(tuple, keys.tolist()), present.tolist()):
            entry = self.entries.get(key)
            if entry is None:
                entry = self.entries[key] = [0, 0]
                self._key_array = None
            entry[0] += sign * int(x)
            entry[1] += sign
            if entry[1] == 0:
                del self.entries[key]
                self._key_array = None
        self.total_edges += sign * int(np.count_nonzero(present))
        self.total_pairs += sign * len(present)

    def _add_unique(self, keys: np.ndarray, present: np.ndarray) -> None:
        # mixed-radix code per row; every component lies in [0, 2n)
        radix = 2 * self.n
        codes = np.zeros(len(keys), dtype=np.int64)
        for col in range(keys.shape[1]):
            codes = codes * radix + keys[:, col]
        uniq_codes, first, inv = np.unique(codes, return_index=True, return_inverse=True)
        uniq = keys[first]
        tot = np.bincount(inv, minlength=len(uniq))
        on = np.bincount(inv, weights=present, minlength=len(uniq))
        for key, a, b in zip(map(tuple, uniq.tolist()), on.astype(np.int64).tolist(), tot.tolist()):
            entry = self.entries.setdefault(key, [0, 0])
            entry[0] += a
            entry[1] += b
        self._key_array = None
        self.total_edges += int(np.count_nonzero(present))
        self.total_pairs += len(present)

    def _nearest(self, key: tuple[int, ...]) -> tuple[int, ...]:
        if self._key_array is None:
            self._key_array = np.array(sorted(self.entries), dtype=np.int64)
        dist = np.abs(self._key_array - np.asarray(key, dtype=np.int64)).sum(axis=1)
        # keys are sorted lexicographically, so argmin picks the smallest on ties
        return tuple(self._key_array[int(np.argmin(dist))].tolist())

    def lookup(self, key) -> float:
        key = tuple(int(v) for v in key)
        entry = self.entries.get(key)
        if entry is not None:
            return entry[0] / entry[1]
        if not self.entries:
            return self.fallback_density
        if self.unseen == "zero":
            return 0.0
        n_u, N_u = self.entries[self._nearest(key)]
        return n_u / N_u

    def lookup_many(self, keys: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`lookup` over the rows of ``keys``."""
        keys = np.asarray(keys, dtype=np.int64)
        if len(keys) == 0:
            return np.zeros(0)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        vals = np.array([self.lookup(k) for k in uniq.tolist()])
        return vals[inv.reshape(-1)]

    def pair_probabilities(self, g: Graph) -> np.ndarray:
        """q_hat for every pair of ``g`` in canonical order."""
        return self.lookup_many(change_statistics_matrix(g, self.statistics))

    def rows(self) -> list[tuple[tuple[int, ...], int, int, float]]:
        return [(k, v[0], v[1], v[0] / v[1]) for k, v in sorted(self.entries.items())]

    def to_csv(self, fh=None) -> str | None:
        """Write ``key..., n_u, N_u, qhat`` rows; returns the text if no handle given."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"d_{s}" for s in self.statistics] + ["n_u", "N_u", "qhat"])
        for key, n_u, N_u, q in self.rows():
            w.writerow(list(key) + [n_u, N_u, f"{q:.6g}"])
        return buf.getvalue() if fh is None else None

    def __repr__(self) -> str:
        return f"ConditionalTable(statistics={self.statistics}, keys={len(self)}, pairs={self.total_pairs})"


def estimate_table(graphs: Graph | Sequence[Graph], statistics, unseen: str = "nearest") -> ConditionalTable:
    """Pool relative frequencies of edges per change-statistic key over ``graphs``."""
    if isinstance(graphs, Graph):
        graphs = [graphs]
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("all graphs must have the same vertex count")
    table = ConditionalTable(statistics, n, unseen)
    for g in graphs:
        table._add_unique(change_statistics_matrix(g, table.statistics), g.to_vector())
    return table


def _incident_contributions(adj: np.ndarray, deg: np.ndarray, statistics, i: int, j: int):
    """Keys and indicators of every pair that touches i or j (s = (i, j) once)."""
    n = adj.shape[0]
    others_i = np.delete(np.arange(n), i)
    others_j = np.setdiff1d(np.arange(n), (i, j), assume_unique=True)
    u = np.concatenate([np.full(len(others_i), i), np.full(len(others_j), j)])
    v = np.concatenate([others_i, others_j])
    present = adj[u, v]
    cols = []
    for name in statistics:
        if name == "edges":
            cols.append(np.ones(len(u), dtype=np.int64))
        elif name == "two_stars":
            cols.append(deg[u] + deg[v] - 2 * present.astype(np.int64))
        else:
            cols.append(np.count_nonzero(adj[u] & adj[v], axis=1).astype(np.int64))
    return np.stack(cols, axis=1), present


def apply_flip_inplace(table: ConditionalTable, g: Graph, i: int, j: int) -> None:
    """
    Toggle edge (i, j) of ``g`` and update ``table`` to match, both in place.

    Only pairs incident to i or j can change key or indicator when (i, j)
    flips: degrees move only at i and j, and the common neighbourhood of a
    pair (u, v) depends only on rows u and v of the adjacency matrix.
    """
    keys, present = _incident_contributions(g.adjacency, g.degrees, table.statistics, i, j)
    table._add(keys, present, -1)
    g.set_edge(i, j, not g.adjacency[i, j])
    keys, present = _incident_contributions(g.adjacency, g.degrees, table.statistics, i, j)
    table._add(keys, present, +1)


def update_after_flip(table: ConditionalTable, g_before: Graph, s: VertexPair) -> ConditionalTable:
    """Table of the graph obtained by flipping ``s`` in ``g_before``; inputs untouched."""
    out = table.copy()
    apply_flip_inplace(out, g_before.copy(), s.i, s.j)
    return out
