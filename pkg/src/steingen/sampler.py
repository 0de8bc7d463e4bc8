"""
SteinGen: Glauber dynamics driven by a conditional-probability table that is
re-estimated from the current graph as the chain moves.

``reestimate_interval=1`` re-estimates after every change of the graph,
``None`` never re-estimates (SteinGen_nr, an ordinary MCMC run from the
input), and ``k > 1`` re-estimates after every k-th change.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import expit

from .ergm import (
    ErgmSpec,
    conditional_probabilities,
    default_steps,
    delta_function,
    draw_moves,
    pair_list,
)
from .estimation import ConditionalTable, apply_flip_inplace, estimate_table
from .graph import Graph, count_statistics, num_pairs, validate_statistics
from .kernels import KernelSpec

VARIANTS = ("steingen", "steingen_nr", "steingen_k")


def derive_seed(master: int, index: int) -> int:
    """Counter-based child seed for run ``index`` of a batch."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


@dataclass
class GenRunConfig:
    steps: int | None = None
    reestimate_interval: int | None = 1
    seed: int = 0
    record_trajectory: bool = True
    record_every: int | None = None
    checkpoints: tuple[int, ...] = ()
    incremental: bool = False

    def __post_init__(self):
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.reestimate_interval is not None and self.reestimate_interval < 1:
            raise ValueError("reestimate_interval must be >= 1 or None")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be positive")

    @classmethod
    def for_variant(cls, variant: str, k: int | None = None, **kw) -> "GenRunConfig":
        if variant == "steingen":
            return cls(reestimate_interval=1, **kw)
        if variant == "steingen_nr":
            return cls(reestimate_interval=None, **kw)
        if variant == "steingen_k":
            if not k:
                raise ValueError("steingen_k needs k")
            return cls(reestimate_interval=int(k), **kw)
        raise ValueError(f"unknown variant {variant!r}")


@dataclass
class Trajectory:
    records: list[dict] = field(default_factory=list)
    graphs: dict[int, Graph] = field(default_factory=dict)
    change_count: int = 0
    reestimation_count: int = 0
    steps: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "hamming_to_x0", "density", "s2", "t"])
        for r in self.records:
            w.writerow([r["step"], r["hamming_to_x0"], f"{r['density']:.6g}", r["s2"], r["t"]])
        return buf.getvalue()


class ExactConditional:
    """Model conditional probabilities behind the table ``lookup`` interface."""

    def __init__(self, spec: ErgmSpec):
        self.spec = spec
        self.statistics = spec.statistics
        self.n = spec.n
        self._cache: dict[tuple, float] = {}

    def lookup(self, key) -> float:
        key = tuple(key)
        p = self._cache.get(key)
        if p is None:
            p = self._cache[key] = float(expit(sum(b * d for b, d in zip(self.spec.beta, key))))
        return p

    def pair_probabilities(self, g: Graph) -> np.ndarray:
        return conditional_probabilities(self.spec, g)


def _record(g: Graph, step: int, ham: int) -> dict:
    e, s2, t = count_statistics(g).tolist()
    return {"step": step, "hamming_to_x0": ham, "density": e / g.num_pairs, "s2": s2, "t": t}


def steingen_generate(
    x0: Graph,
    statistics,
    cfg: GenRunConfig | None = None,
    table: ConditionalTable | ExactConditional | None = None,
) -> tuple[Graph, Trajectory]:
    """
    Generate one graph from ``x0``.

    The table is estimated from ``x0`` unless given.  Each step draws a pair
    uniformly, sets its indicator to 1 with the table probability of its
    change statistic and, if the graph changed and the change counter reaches
    the interval, re-estimates the table from the current graph.
    """
    cfg = cfg or GenRunConfig()
    stats = validate_statistics(statistics)
    n = x0.n
    if n < 2:
        raise ValueError("need n >= 2")
    N = num_pairs(n)
    r = cfg.steps if cfg.steps is not None else default_steps(n)
    k = cfg.reestimate_interval
    if table is None:
        table = estimate_table(x0, stats)
    elif tuple(table.statistics) != stats:
        raise ValueError("table statistics do not match the selection")
    incremental = cfg.incremental and k == 1 and isinstance(table, ConditionalTable)
    if incremental:
        table = table.copy()

    g = x0.copy()
    x0_adj = x0.adjacency
    adj, deg = g.adjacency, g.degrees
    pairs = pair_list(n)
    delta = delta_function(stats)
    rng = np.random.default_rng(cfg.seed)
    idx, us = draw_moves(rng, N, r)

    record_every = cfg.record_every or max(1, N // 10)
    checkpoints = set(int(c) for c in cfg.checkpoints)
    traj = Trajectory(steps=r)
    ham = 0
    if cfg.record_trajectory:
        traj.records.append(_record(g, 0, ham))
    if 0 in checkpoints:
        traj.graphs[0] = g.copy()

    entries = table.entries if isinstance(table, ConditionalTable) else None
    since = 0
    for step, (s, u) in enumerate(zip(idx.tolist(), us.tolist()), 1):
        i, j = pairs[s]
        key = delta(adj, deg, i, j)
        if entries is not None:
            e = entries.get(key)
            p = e[0] / e[1] if e is not None else table.lookup(key)
        else:
            p = table.lookup(key)
        new = u < p
        if new != adj[i, j]:
            if incremental:
                apply_flip_inplace(table, g, i, j)
            else:
                g.set_edge(i, j, new)
            ham += 1 if new != x0_adj[i, j] else -1
            traj.change_count += 1
            since += 1
            if k is not None and since >= k:
                if not incremental:
                    table = estimate_table(g, stats, getattr(table, "unseen", "nearest"))
                    entries = table.entries
                traj.reestimation_count += 1
                since = 0
        if cfg.record_trajectory and step % record_every == 0:
            traj.records.append(_record(g, step, ham))
        if step in checkpoints:
            traj.graphs[step] = g.copy()
    if cfg.record_trajectory and traj.records[-1]["step"] != r:
        traj.records.append(_record(g, r, ham))
    return g, traj


def _batch_worker(args):
    x0, stats, cfg, table = args
    return steingen_generate(x0, stats, cfg, table)


def steingen_batch(
    x0: Graph,
    statistics,
    cfg: GenRunConfig | None = None,
    m: int = 1,
    table=None,
    jobs: int = 1,
    return_trajectories: bool = False,
):
    """
    ``m`` independent runs from ``x0``; run i uses seed ``derive_seed(cfg.seed, i)``.

    Results are in run order regardless of ``jobs``.
    """
    cfg = cfg or GenRunConfig()
    if m <= 0:
        return ([], []) if return_trajectories else []
    tasks = [(x0, statistics, replace(cfg, seed=derive_seed(cfg.seed, i)), table) for i in range(m)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_batch_worker, tasks))
    else:
        results = [_batch_worker(t) for t in tasks]
    graphs = [g for g, _ in results]
    if return_trajectories:
        return graphs, [t for _, t in results]
    return graphs


def select_by_gkss(
    candidates: Sequence[Graph],
    spec_or_table: ErgmSpec | ConditionalTable,
    keep: int,
    kernel: KernelSpec | None = None,
    return_values: bool = False,
):
    """Keep the candidates with the smallest gKSS (spec) or AgraSSt (table) value."""
    from .stein import agrasst_squared, gkss_squared

    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates")
    if not 0 <= keep <= len(candidates):
        raise ValueError("keep must be between 0 and the number of candidates")
    if isinstance(spec_or_table, ErgmSpec):
        values = [gkss_squared(spec_or_table, g, kernel) for g in candidates]
    else:
        values = [agrasst_squared(spec_or_table, g, kernel, resample_B="full") for g in candidates]
    order = sorted(range(len(candidates)), key=lambda i: (values[i], i))[:keep]
    chosen = [candidates[i] for i in order]
    if return_values:
        return chosen, [values[i] for i in order]
    return chosen
