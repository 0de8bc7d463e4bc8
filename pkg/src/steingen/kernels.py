"""
Graph kernels on unlabeled graphs of a common vertex count.

All kernels work on stacks of adjacency matrices (shape ``(B, n, n)``) so the
Gram matrix of a graph and its one-flip neighbours is computed in one pass.

Weisfeiler-Lehman labels are 64-bit hashes of (own label, multiset of
neighbour labels), with the multiset hashed as a wrapping sum of mixed
labels.  Labels are therefore comparable across calls without a shared
dictionary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import DimensionError, Graph

FAMILIES = ("wl", "gveh", "sp", "constant")
_ALIASES = {
    "weisfeiler-lehman": "wl",
    "gaussian-vertex-edge-histogram": "gveh",
    "shortest-path": "sp",
    "const": "constant",
}


@dataclass(frozen=True)
class KernelSpec:
    family: str = "wl"
    wl_levels: int = 3
    bandwidth: float = 1.0

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.wl_levels < 0:
            raise ValueError("wl_levels must be non-negative")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "family", fam)


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser, elementwise on uint64 (wrapping arithmetic)."""
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def wl_labels(adjs: np.ndarray, levels: int) -> np.ndarray:
    """Hashed WL labels, shape (B, levels + 1, n); level 0 is constant."""
    adjs = np.asarray(adjs, dtype=bool)
    B, n, _ = adjs.shape
    a = adjs.astype(np.uint64)
    out = np.empty((B, levels + 1, n), dtype=np.uint64)
    lab = np.full((B, n), np.uint64(1), dtype=np.uint64)
    out[:, 0] = lab
    with np.errstate(over="ignore"):
        for h in range(1, levels + 1):
            nb = np.matmul(a, _mix(lab)[..., None])[..., 0]
            lab = _mix(_mix(lab ^ np.uint64(h)) + nb * _M1)
            out[:, h] = lab
    return out


def _count_features(labels: np.ndarray) -> sparse.csr_matrix:
    """Sparse (B, #distinct labels) histogram matrix."""
    B = labels.shape[0]
    flat = labels.reshape(B, -1)
    uniq, inv = np.unique(flat, return_inverse=True)
    rows = np.repeat(np.arange(B), flat.shape[1])
    return sparse.csr_matrix(
        (np.ones(flat.size), (rows, inv.reshape(-1))), shape=(B, len(uniq))
    )


def _cosine(gram: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    d[d == 0] = 1.0
    return gram / np.outer(d, d)


def _wl_gram(adjs, levels):
    F = _count_features(wl_labels(adjs, levels))
    return _cosine((F @ F.T).toarray())


def shortest_path_lengths(adjs: np.ndarray) -> np.ndarray:
    """All-pairs hop distances by batched BFS; unreachable pairs get -1."""
    adjs = np.asarray(adjs, dtype=bool)
    B, n, _ = adjs.shape
    a = adjs.astype(np.float32)
    dist = np.full((B, n, n), -1, dtype=np.int64)
    eye = np.broadcast_to(np.eye(n, dtype=bool), (B, n, n))
    visited = eye.copy()
    frontier = eye.astype(np.float32)
    dist[visited] = 0
    for d in range(1, n):
        reach = np.matmul(frontier, a) > 0
        new = reach & ~visited
        if not new.any():
            break
        dist[new] = d
        visited |= new
        frontier = new.astype(np.float32)
    return dist


def sp_histograms(adjs: np.ndarray) -> np.ndarray:
    """Counts of unordered pairs at each distance 1..n-1, plus an unreachable bin."""
    dist = shortest_path_lengths(adjs)
    B, n, _ = dist.shape
    r, c = np.triu_indices(n, k=1)
    d = dist[:, r, c]
    d = np.where(d < 0, n, d)
    hist = np.zeros((B, n + 1))
    for b in range(B):
        hist[b] = np.bincount(d[b], minlength=n + 1)
    return hist[:, 1:]


def gveh_features(adjs: np.ndarray) -> np.ndarray:
    """Degree histogram (bins 0..n-1) with the edge count appended."""
    adjs = np.asarray(adjs, dtype=bool)
    B, n, _ = adjs.shape
    deg = adjs.sum(axis=2)
    feats = np.zeros((B, n + 1))
    rows = np.repeat(np.arange(B), n)
    np.add.at(feats, (rows, deg.reshape(-1)), 1.0)
    feats[:, n] = deg.sum(axis=1) / 2
    return feats


def gram(spec: KernelSpec, adjs: np.ndarray) -> np.ndarray:
    """Kernel Gram matrix over a stack of adjacency matrices."""
    adjs = np.asarray(adjs, dtype=bool)
    if adjs.ndim != 3:
        raise DimensionError("expected a (B, n, n) adjacency stack")
    B = adjs.shape[0]
    if spec.family == "constant":
        return np.ones((B, B))
    if spec.family == "wl":
        return _wl_gram(adjs, spec.wl_levels)
    if spec.family == "sp":
        H = sp_histograms(adjs)
        return _cosine(H @ H.T)
    H = gveh_features(adjs)
    sq = (H * H).sum(axis=1)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * H @ H.T, 0.0, None)
    return np.exp(-d2 / (2.0 * spec.bandwidth**2))


def kernel_eval(spec: KernelSpec, g1: Graph, g2: Graph) -> float:
    if g1.n != g2.n:
        raise DimensionError(f"vertex counts differ: {g1.n} vs {g2.n}")
    return float(gram(spec, np.stack([g1.adjacency, g2.adjacency]))[0, 1])
