"""
Kernel Stein statistics for a single observed graph, and Monte-Carlo tests.

For pair s let y_s / z_s be x with s set to 1 / 0 and c_s = q(s) - x_s.  The
squared statistic is

    (1/N^2) sum_{s,s'} c_s c_s' [K(y_s,y_s') - K(y_s,z_s') - K(z_s,y_s') + K(z_s,z_s')].

One of y_s, z_s is always x itself and the other is the one-flip neighbour
w_s, so with v_s the probability of moving to w_s the bracket collapses to
v_s v_s' [K(w_s,w_s') - K(w_s,x) - K(x,w_s') + K(x,x)] and a single Gram
matrix over {x, w_1, ..., w_N} suffices.  gKSS uses the model's exact
conditional probabilities, AgraSSt the estimated table.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ergm import ErgmSpec, conditional_probabilities
from .estimation import ConditionalTable
from .graph import Graph, num_pairs, pair_arrays
from .kernels import KernelSpec, gram

FULL_SUM_MAX_PAIRS = 2000
DEFAULT_RESAMPLE = 500


def flip_neighbours(x: Graph, pair_idx: np.ndarray | None = None) -> np.ndarray:
    """Adjacency stack of x with each selected pair toggled."""
    r, c = pair_arrays(x.n)
    if pair_idx is not None:
        r, c = r[pair_idx], c[pair_idx]
    stack = np.repeat(x.adjacency[None], len(r), axis=0)
    k = np.arange(len(r))
    stack[k, r, c] = ~stack[k, r, c]
    stack[k, c, r] = stack[k, r, c]
    return stack


def stein_quadratic(x: Graph, q: np.ndarray, kernel: KernelSpec, pair_idx: np.ndarray | None = None) -> float:
    """
    Raw (unclamped) squared Stein statistic.

    ``q`` holds the edge probability of every pair.  With ``pair_idx`` the
    double sum runs over that multiset of pairs (repeats allowed) and is
    normalised by its length squared.
    """
    xs = x.to_vector()
    move = np.where(xs, 1.0 - q, q)
    if pair_idx is None:
        uniq, inv = np.arange(len(xs)), np.arange(len(xs))
    else:
        uniq, inv = np.unique(pair_idx, return_inverse=True)
        inv = inv.reshape(-1)
    stack = np.concatenate([x.adjacency[None], flip_neighbours(x, uniq)])
    G = gram(kernel, stack)
    kxx, kxw, Kww = G[0, 0], G[0, 1:], G[1:, 1:]
    M = Kww - kxw[:, None] - kxw[None, :] + kxx
    # aggregate repeated draws: weight each distinct pair by its multiplicity
    w = np.bincount(inv, minlength=len(uniq)) * move[uniq]
    return float(w @ M @ w) / len(inv) ** 2


def gkss_squared(spec: ErgmSpec, x: Graph, kernel: KernelSpec | None = None, return_raw: bool = False):
    """Squared graph kernel Stein statistic of ``x`` against an explicit ERGM."""
    if spec.n != x.n:
        raise ValueError("spec and graph sizes differ")
    kernel = kernel or KernelSpec()
    raw = stein_quadratic(x, conditional_probabilities(spec, x), kernel)
    val = max(raw, 0.0)
    return (val, raw) if return_raw else val


def _resample_size(N: int, resample_B) -> int | None:
    if resample_B == "full":
        return None
    if resample_B is None:
        return None if N <= FULL_SUM_MAX_PAIRS else DEFAULT_RESAMPLE
    return int(resample_B)


def agrasst_squared(
    table: ConditionalTable,
    x: Graph,
    kernel: KernelSpec | None = None,
    resample_B: int | str | None = None,
    seed=None,
    return_raw: bool = False,
):
    """
    Squared approximate Stein statistic with estimated edge probabilities.

    ``resample_B``: "full" for the complete double sum, an integer B for B
    pairs drawn uniformly with replacement, or None for the size-based default.
    """
    if table.n != x.n:
        raise ValueError("table and graph sizes differ")
    kernel = kernel or KernelSpec()
    N = num_pairs(x.n)
    B = _resample_size(N, resample_B)
    q = table.pair_probabilities(x)
    if B is None:
        raw = stein_quadratic(x, q, kernel)
    else:
        idx = np.random.default_rng(seed).integers(0, N, size=B)
        raw = stein_quadratic(x, q, kernel, idx)
    val = max(raw, 0.0)
    return (val, raw) if return_raw else val


# ---------------------------------------------------------------------------
# Monte-Carlo calibration


def mc_threshold(null_values: Sequence[float], alpha: float) -> float:
    """The ceil((1 - alpha)(M + 1))-th smallest null value (inf if beyond M)."""
    vals = np.sort(np.asarray(null_values, dtype=float))
    M = len(vals)
    k = math.ceil((1.0 - alpha) * (M + 1) - 1e-12)
    return float(vals[k - 1]) if k <= M else math.inf


def mc_pvalue(value: float, null_values: Sequence[float]) -> float:
    null_values = np.asarray(null_values, dtype=float)
    return (1.0 + np.count_nonzero(null_values >= value)) / (len(null_values) + 1.0)


@dataclass
class SteinStatReport:
    statistic_value: float
    threshold: float
    reject: bool
    alpha: float
    p_value: float
    raw_value: float | None = None
    null_values: list[float] = field(default_factory=list, repr=False)
    seed: int | None = None

    def to_dict(self, include_null: bool = False) -> dict:
        d = asdict(self)
        nv = d.pop("null_values")
        if nv:
            d["null_summary"] = {
                "min": float(np.min(nv)),
                "median": float(np.median(nv)),
                "max": float(np.max(nv)),
                "M": len(nv),
            }
        if include_null:
            d["null_values"] = nv
        return d


@dataclass
class TestBatchReport:
    reports: list[SteinStatReport]
    threshold: float
    alpha: float
    null_values: list[float] = field(repr=False)
    calibration_warning: bool = False

    @property
    def rejection_rate(self) -> float:
        return float(np.mean([r.reject for r in self.reports])) if self.reports else math.nan


def calibrate_and_test(
    statistic: Callable[[Graph], float],
    null_sampler: Callable[[int], Graph],
    graphs: Graph | Sequence[Graph],
    M: int = 200,
    alpha: float = 0.05,
    null_values: Sequence[float] | None = None,
) -> TestBatchReport:
    """
    Monte-Carlo test of each graph in ``graphs``.

    ``null_sampler(k)`` returns the k-th null graph (k = 0..M-1), so seeding
    is the sampler's responsibility.  Precomputed ``null_values`` skip the
    simulation.
    """
    if null_values is None:
        if M < 20:
            raise ValueError("need at least 20 null samples")
        null_values = [float(statistic(null_sampler(k))) for k in range(M)]
    null_values = [float(v) for v in null_values]
    thr = mc_threshold(null_values, alpha)
    degenerate = len(set(null_values)) <= 1
    if degenerate:
        warnings.warn("all null statistic values are identical", RuntimeWarning, stacklevel=2)
    if isinstance(graphs, Graph):
        graphs = [graphs]
    reports = []
    for g in graphs:
        val = float(statistic(g))
        reports.append(
            SteinStatReport(
                statistic_value=val,
                threshold=thr,
                reject=bool(val > thr),
                alpha=alpha,
                p_value=mc_pvalue(val, null_values),
                null_values=null_values,
            )
        )
    return TestBatchReport(reports, thr, alpha, null_values, degenerate)
