"""
Exponential random graph models over edge, two-star and triangle counts.

Coefficients multiply raw counts, q(x) ~ exp(b1 E + b2 S2 + b3 T), so the
conditional edge probability given the rest of the graph is the logistic
function of b . delta_s t(x).  The exact Glauber sampler here is the ground
truth that produces "observed" graphs and Monte-Carlo null samples.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .graph import (
    Graph,
    VertexPair,
    change_statistics,
    count_statistics,
    change_statistics_matrix,
    num_pairs,
    validate_statistics,
)

EULER_GAMMA = 0.5772156649


class AssumptionViolated(RuntimeError):
    """The high-temperature fixed point is not unique or was not found."""


@dataclass(frozen=True)
class ErgmSpec:
    n: int
    statistics: tuple[str, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        stats = tuple(self.statistics)
        if validate_statistics(stats) != stats:
            raise ValueError("statistics must be listed in (edges, two_stars, triangles) order")
        if stats[0] != "edges":
            raise ValueError("the edge statistic must be included first")
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != len(stats):
            raise ValueError("beta length must match the statistic selection")
        if not all(math.isfinite(b) for b in beta):
            raise ValueError("beta must be finite")
        if self.n < 2:
            raise ValueError("need at least two vertices")
        object.__setattr__(self, "statistics", stats)
        object.__setattr__(self, "beta", beta)

    @property
    def beta_array(self) -> np.ndarray:
        return np.asarray(self.beta)

    def coefficient(self, name: str) -> float:
        return self.beta[self.statistics.index(name)] if name in self.statistics else 0.0

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "statistics": list(self.statistics), "beta": list(self.beta)})

    @classmethod
    def from_dict(cls, d: dict) -> "ErgmSpec":
        return cls(int(d["n"]), validate_statistics(d["statistics"]), tuple(d["beta"]))

    @classmethod
    def from_json(cls, text: str) -> "ErgmSpec":
        return cls.from_dict(json.loads(text))

    def unnormalized_log_prob(self, g: Graph) -> float:
        return float(self.beta_array @ count_statistics(g, self.statistics))


def named_model(name: str, n: int) -> ErgmSpec:
    """The four synthetic benchmark models with b = (-2, 1/n, -1/n)."""
    name = name.upper()
    if name == "ER":
        return ErgmSpec(n, ("edges",), (-2.0,))
    if name == "E2S":
        return ErgmSpec(n, ("edges", "two_stars"), (-2.0, 1.0 / n))
    if name == "ET":
        return ErgmSpec(n, ("edges", "triangles"), (-2.0, -1.0 / n))
    if name == "E2ST":
        return ErgmSpec(n, ("edges", "two_stars", "triangles"), (-2.0, 1.0 / n, -1.0 / n))
    raise ValueError(f"unknown model {name!r}")


def conditional_probability(spec: ErgmSpec, delta) -> float | np.ndarray:
    """P(edge present | rest of graph) = exp(b.d) / (exp(b.d) + 1)."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape[-1] != len(spec.beta):
        raise ValueError("change statistic length does not match the model")
    z = delta @ spec.beta_array
    return expit(z) if np.ndim(z) else float(expit(z))


def conditional_probabilities(spec: ErgmSpec, g: Graph) -> np.ndarray:
    """Conditional edge probability for every pair of ``g``, canonical order."""
    return expit(change_statistics_matrix(g, spec.statistics) @ spec.beta_array)


def default_steps(n: int) -> int:
    """Coupon-collector step count ceil(N ln N + gamma N + 1/2)."""
    if n < 2:
        raise ValueError("need n >= 2")
    N = num_pairs(n)
    return int(math.ceil(N * math.log(N) + EULER_GAMMA * N + 0.5))


@dataclass
class GlauberState:
    graph: Graph
    rng: np.random.Generator
    step: int = 0


def draw_moves(rng: np.random.Generator, N: int, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Pair indices and uniforms for ``steps`` single-site updates.

    Every chain in the package consumes randomness through this function so
    that chains sharing a seed see the same moves.
    """
    return rng.integers(0, N, size=steps), rng.random(steps)


def glauber_step(state: GlauberState, spec: ErgmSpec) -> GlauberState:
    """Resample one uniformly chosen edge indicator in place."""
    g = state.graph
    (idx,), (u,) = draw_moves(state.rng, g.num_pairs, 1)
    i, j = pair_list(g.n)[int(idx)]
    p = conditional_probability(spec, change_statistics(g, VertexPair(i, j, int(idx)), spec.statistics))
    g.set_edge(i, j, u < p)
    state.step += 1
    return state


_PAIR_CACHE: dict[int, list[tuple[int, int]]] = {}


def pair_list(n: int) -> list[tuple[int, int]]:
    pairs = _PAIR_CACHE.get(n)
    if pairs is None:
        r, c = np.triu_indices(n, k=1)
        pairs = list(zip(r.tolist(), c.tolist()))
        _PAIR_CACHE[n] = pairs
    return pairs


def delta_function(statistics: tuple[str, ...]):
    """Fast change-statistic key as a tuple of ints, for chain inner loops."""
    has_e = "edges" in statistics
    has_s2 = "two_stars" in statistics
    has_t = "triangles" in statistics

    def delta(adj, deg, i, j):
        key = [1] if has_e else []
        if has_s2:
            key.append(int(deg[i] + deg[j]) - 2 * int(adj[i, j]))
        if has_t:
            key.append(int(np.count_nonzero(adj[i] & adj[j])))
        return tuple(key)

    return delta


def sample_exact(spec: ErgmSpec, steps: int | None = None, seed=None, init: Graph | None = None) -> Graph:
    """
    Run the exact Glauber dynamics for ``steps`` updates.

    ``init`` defaults to the empty graph and ``steps`` to ``default_steps(n)``.
    ``steps=0`` returns a copy of ``init``.
    """
    if steps is None:
        steps = default_steps(spec.n)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    g = Graph.empty(spec.n) if init is None else init.copy()
    if g.n != spec.n:
        raise ValueError("initial graph size does not match the model")
    rng = np.random.default_rng(seed)
    pairs = pair_list(g.n)
    idx, us = draw_moves(rng, g.num_pairs, steps)
    delta = delta_function(spec.statistics)
    beta = spec.beta
    adj, deg = g.adjacency, g.degrees
    cache: dict[tuple, float] = {}
    for k, u in zip(idx.tolist(), us.tolist()):
        i, j = pairs[k]
        key = delta(adj, deg, i, j)
        p = cache.get(key)
        if p is None:
            p = float(expit(sum(b * d for b, d in zip(beta, key))))
            cache[key] = p
        g.set_edge(i, j, u < p)
    return g


def transition_matrix(spec: ErgmSpec) -> np.ndarray:
    """Exact Glauber transition matrix over all 2^N graphs (tiny n only).

    States are indexed by the integer whose bit s is the indicator of pair s.
    """
    N = num_pairs(spec.n)
    if N > 12:
        raise ValueError("state space too large for an explicit matrix")
    S = 1 << N
    P = np.zeros((S, S))
    pairs = pair_list(spec.n)
    for x in range(S):
        g = Graph.from_vector(spec.n, [(x >> s) & 1 for s in range(N)])
        for s, (i, j) in enumerate(pairs):
            p1 = conditional_probability(spec, change_statistics(g, VertexPair(i, j, s), spec.statistics))
            P[x, x | (1 << s)] += p1 / N
            P[x, x & ~(1 << s)] += (1.0 - p1) / N
    return P


def exact_distribution(spec: ErgmSpec) -> tuple[list[Graph], np.ndarray]:
    """All graphs on n vertices (bit order as in transition_matrix) and their ERGM law."""
    N = num_pairs(spec.n)
    if N > 20:
        raise ValueError("state space too large to enumerate")
    graphs = [Graph.from_vector(spec.n, [(x >> s) & 1 for s in range(N)]) for x in range(1 << N)]
    logw = np.array([spec.unnormalized_log_prob(g) for g in graphs])
    w = np.exp(logw - logw.max())
    return graphs, w / w.sum()


# ---------------------------------------------------------------------------
# high-temperature fixed point


def normalized_coefficients(spec: ErgmSpec) -> dict[str, float]:
    """
    Coefficients for the injection-count statistics t_l = t(H_l, x) / n(n-1)...(n-v_l+3).

    Injection counts are 2E, 2 S2 and 6T, so b_raw E = (b_raw/2) (2E),
    b_raw S2 = (b_raw n/2) (2 S2 / n) and b_raw T = (b_raw n/6) (6T / n).
    """
    n = spec.n
    return {
        "edges": spec.coefficient("edges") / 2.0,
        "two_stars": spec.coefficient("two_stars") * n / 2.0,
        "triangles": spec.coefficient("triangles") * n / 6.0,
    }


_EDGE_COUNT = {"edges": 1, "two_stars": 2, "triangles": 3}


def phi_big(spec: ErgmSpec, a):
    """Phi(a) = sum_l b_l e_l a^(e_l - 1) with normalised coefficients."""
    c = normalized_coefficients(spec)
    return sum(c[k] * e * np.power(a, e - 1) for k, e in _EDGE_COUNT.items())


def contraction_constant(spec: ErgmSpec) -> float:
    """|Phi|'(1) / 2; the high-temperature condition asks for a value below 1."""
    c = normalized_coefficients(spec)
    return 0.5 * sum(abs(c[k]) * e * (e - 1) for k, e in _EDGE_COUNT.items())


def _tanh_map(spec: ErgmSpec):
    return lambda a: 0.5 * (1.0 + np.tanh(phi_big(spec, a)))


def _mean_field_map(spec: ErgmSpec):
    n = spec.n
    b1, b2, b3 = (spec.coefficient(k) for k in ("edges", "two_stars", "triangles"))
    return lambda a: expit(b1 + 2.0 * b2 * (n - 1) * a + b3 * (n - 2) * a * a)


def solve_fixed_point(
    spec: ErgmSpec,
    method: str = "tanh",
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    check: bool = True,
) -> float:
    """
    Edge probability a* of the approximating Bernoulli graph.

    ``method="tanh"`` solves a = (1 + tanh Phi(a)) / 2 with the normalised
    statistics; ``method="mean_field"`` solves
    a = sigmoid(b1 + 2 b2 (n-1) a + b3 (n-2) a^2) with raw counts.
    Damped iteration from 0.5, falling back to bisection.
    """
    if method == "tanh":
        f = _tanh_map(spec)
    elif method == "mean_field":
        f = _mean_field_map(spec)
    else:
        raise ValueError(f"unknown method {method!r}")

    if check and contraction_constant(spec) >= 1.0:
        warnings.warn(
            f"|Phi|'(1)/2 = {contraction_constant(spec):.4g} is not below 1; "
            "the fixed point may not describe the model",
            stacklevel=2,
        )

    # count sign changes of f(a) - a on a grid to detect multiple roots
    grid = np.linspace(0.0, 1.0, 2001)
    g = f(grid) - grid
    crossings = np.count_nonzero(np.signbit(g[:-1]) != np.signbit(g[1:]))
    if crossings > 1:
        raise AssumptionViolated(f"{crossings} fixed points found on [0, 1]")

    a = 0.5
    for _ in range(max_iter):
        a_new = (1.0 - damping) * a + damping * float(f(a))
        if abs(a_new - a) < tol:
            a = a_new
            break
        a = a_new
    if abs(float(f(a)) - a) < 1e-10:
        return a

    lo, hi = 0.0, 1.0
    glo = float(f(lo)) - lo
    if glo * (float(f(hi)) - hi) > 0:
        raise AssumptionViolated("no fixed point bracketed on [0, 1]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = float(f(mid)) - mid
        if gm == 0.0 or hi - lo < 1e-15:
            break
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    if abs(float(f(a)) - a) >= 1e-10:
        raise AssumptionViolated("fixed-point iteration did not converge")
    return a
