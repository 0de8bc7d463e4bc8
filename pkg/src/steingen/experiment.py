"""
Experiment orchestration: generation runs, rejection-rate trials, assessment.

Every output is a deterministic function of the configuration and master
seed.  Trial ``t`` uses seed ``derive_seed(seed, t)`` and writes its own CSV,
and the aggregate tables are recomputed from those files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ergm import ErgmSpec, default_steps, named_model, sample_exact
from .estimation import ConditionalTable, estimate_table
from .graph import Graph, read_edgelist, validate_statistics, write_edgelist
from .kernels import KernelSpec
from .metrics import SUMMARY_KEYS, batch_fidelity_diversity, summary_statistics
from .sampler import GenRunConfig, derive_seed, steingen_batch, steingen_generate
from .stein import agrasst_squared, calibrate_and_test, gkss_squared, mc_pvalue, mc_threshold

log = logging.getLogger(__name__)

GENERATORS = ("steingen", "steingen_nr", "steingen_k", "exact")
OUTPUT_ENV = "STEINGEN_OUTPUT_DIR"


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def config_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "steingen_out")


@dataclass
class ExperimentConfig:
    model: str | dict | None = "E2S"
    n: int = 50
    input_path: str | None = None
    statistics: tuple[str, ...] | None = None
    generators: tuple[str, ...] = ("steingen", "steingen_nr")
    k: int | None = None
    steps: int | None = None
    trials: int = 50
    samples_per_trial: int = 30
    kernel: dict = field(default_factory=lambda: {"family": "wl", "wl_levels": 3, "bandwidth": 1.0})
    M: int = 200
    alpha: float = 0.05
    seed: int = 0
    frontier_steps: tuple[int, ...] = ()
    jobs: int = 1
    output: str | None = None

    def __post_init__(self):
        if (self.model is None) == (self.input_path is None):
            raise ValueError("set exactly one of model and input_path")
        if self.trials < 1 or self.samples_per_trial < 1:
            raise ValueError("trials and samples_per_trial must be >= 1")
        for gname in self.generators:
            if gname not in GENERATORS:
                raise ValueError(f"unknown generator {gname!r}")
        if "steingen_k" in self.generators and not self.k:
            raise ValueError("steingen_k needs k")
        self.generators = tuple(self.generators)
        self.frontier_steps = tuple(int(r) for r in self.frontier_steps)

    def spec(self) -> ErgmSpec | None:
        if self.model is None:
            return None
        if isinstance(self.model, dict):
            return ErgmSpec.from_dict(self.model)
        return named_model(self.model, self.n)

    def stat_selection(self) -> tuple[str, ...]:
        if self.statistics:
            return validate_statistics(self.statistics)
        spec = self.spec()
        return spec.statistics if spec else ("edges", "two_stars", "triangles")

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(**self.kernel)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("jobs")
        d.pop("output")
        return json.loads(json.dumps(d))


def generator_config(name: str, steps: int | None, k: int | None, seed: int, **kw) -> GenRunConfig:
    if name == "steingen_k":
        return GenRunConfig.for_variant(name, k=k, steps=steps, seed=seed, **kw)
    return GenRunConfig.for_variant(name, steps=steps, seed=seed, **kw)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(
    input_path: str,
    output: str,
    statistics=("edges", "two_stars", "triangles"),
    steps: int | None = None,
    m: int = 1,
    seed: int = 0,
    variant: str = "steingen",
    k: int | None = None,
    record_every: int | None = None,
    jobs: int = 1,
) -> dict:
    """Write ``m`` generated edge lists, their trajectories and a manifest."""
    x0 = read_edgelist(input_path)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    stats = validate_statistics(statistics)
    cfg = generator_config(variant, steps, k, seed, record_every=record_every)
    graphs, trajs = steingen_batch(x0, stats, cfg, m, jobs=jobs, return_trajectories=True)
    runs = []
    for i, (g, tr) in enumerate(zip(graphs, trajs)):
        write_edgelist(g, out / f"sample_{i:04d}.edges")
        (out / f"trajectory_{i:04d}.csv").write_text(tr.to_csv())
        runs.append(
            {
                "index": i,
                "seed": derive_seed(seed, i),
                "change_count": tr.change_count,
                "reestimation_count": tr.reestimation_count,
            }
        )
    settings = {
        "input": os.path.basename(input_path),
        "n": x0.n,
        "statistics": list(stats),
        "steps": cfg.steps if cfg.steps is not None else default_steps(x0.n),
        "m": m,
        "seed": seed,
        "variant": variant,
        "k": k,
    }
    manifest = {"config": settings, "config_hash": config_hash(settings), "runs": runs}
    _write_json(out / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------------------
# experiment


TRIAL_FIELDS = ("trial", "generator", "steps", "m", "rejections", "rejection_rate", "tv", "hamming_mean", "hamming_sd")


def _tester(cfg: ExperimentConfig, x_input: Graph | None):
    """Statistic closure and null sampler for the experiment's test."""
    kernel = cfg.kernel_spec()
    spec = cfg.spec()
    if spec is not None:
        steps = default_steps(spec.n)

        def statistic(g):
            return gkss_squared(spec, g, kernel)

        def null_sampler(k):
            return sample_exact(spec, steps, derive_seed(cfg.seed + 1_000_003, k))

        return statistic, null_sampler

    table = estimate_table(x_input, cfg.stat_selection())
    return agrasst_tester(table, x_input, kernel, cfg.seed)


def agrasst_tester(table: ConditionalTable, x_input: Graph, kernel: KernelSpec, seed: int, steps: int | None = None):
    """AgraSSt statistic plus a null sampler that runs the fixed-table chain from the input."""
    steps = steps or default_steps(x_input.n)

    def statistic(g):
        return agrasst_squared(table, g, kernel, resample_B=None, seed=seed)

    def null_sampler(k):
        cfg = GenRunConfig(steps=steps, reestimate_interval=None, seed=derive_seed(seed + 2_000_003, k), record_trajectory=False)
        return steingen_generate(x_input, table.statistics, cfg, table)[0]

    return statistic, null_sampler


def null_values_for(cfg: ExperimentConfig, x_input: Graph | None = None) -> list[float]:
    statistic, null_sampler = _tester(cfg, x_input)
    return [float(statistic(null_sampler(k))) for k in range(cfg.M)]


def run_trial(cfg: ExperimentConfig, trial: int, null_values: list[float], x_input: Graph | None = None) -> list[dict]:
    """One trial: draw (or take) the input, generate per generator, test and measure."""
    tseed = derive_seed(cfg.seed, trial)
    spec = cfg.spec()
    stats = cfg.stat_selection()
    if spec is not None:
        x0 = sample_exact(spec, default_steps(spec.n), derive_seed(tseed, 0))
    else:
        x0 = x_input
    statistic, null_sampler = _tester(cfg, x_input)
    rows = []

    def add(name, steps, samples):
        rep = calibrate_and_test(statistic, null_sampler, samples, cfg.M, cfg.alpha, null_values=null_values)
        rej = sum(r.reject for r in rep.reports)
        if name == "observed":
            tv, hm, hs = 0.0, 0.0, 0.0
        else:
            mr = batch_fidelity_diversity(x0, samples)
            tv, hm, hs = mr.tv_degree, mr.scaled_hamming_mean, mr.scaled_hamming_sd
        rows.append(
            {
                "trial": trial,
                "generator": name,
                "steps": steps,
                "m": len(samples),
                "rejections": rej,
                "rejection_rate": rej / len(samples),
                "tv": tv,
                "hamming_mean": hm,
                "hamming_sd": hs,
            }
        )

    if spec is not None:
        add("observed", 0, [x0])
    steps = cfg.steps if cfg.steps is not None else default_steps(x0.n)
    for gi, name in enumerate(cfg.generators):
        gseed = derive_seed(tseed, gi + 1)
        if name == "exact":
            samples = [
                sample_exact(spec, default_steps(spec.n), derive_seed(gseed, i)) for i in range(cfg.samples_per_trial)
            ]
        else:
            gcfg = generator_config(name, steps, cfg.k, gseed, record_trajectory=False)
            samples = steingen_batch(x0, stats, gcfg, cfg.samples_per_trial)
        add(name, steps, samples)

    if cfg.frontier_steps:
        rmax = max(cfg.frontier_steps)
        fseed = derive_seed(tseed, 10_007)
        by_r = {r: [] for r in cfg.frontier_steps}
        for i in range(cfg.samples_per_trial):
            gcfg = GenRunConfig(
                steps=rmax,
                reestimate_interval=1,
                seed=derive_seed(fseed, i),
                record_trajectory=False,
                checkpoints=cfg.frontier_steps,
            )
            _, tr = steingen_generate(x0, stats, gcfg)
            for r in cfg.frontier_steps:
                by_r[r].append(tr.graphs[r])
        for r in cfg.frontier_steps:
            add("frontier", r, by_r[r])
    return rows


def write_trial_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_FIELDS)
        for r in rows:
            w.writerow([r["trial"], r["generator"]] + [fmt(r[k]) for k in TRIAL_FIELDS[2:]])


def read_trial_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            row = {"trial": int(r["trial"]), "generator": r["generator"]}
            for k in ("steps", "m", "rejections"):
                row[k] = int(r[k])
            for k in ("rejection_rate", "tv", "hamming_mean", "hamming_sd"):
                row[k] = float(r[k])
            out.append(row)
        return out


def aggregate(rows: list[dict]) -> tuple[list[dict], list[dict]]:
    """(rejection/metric table per generator, frontier table per step count)."""
    table, frontier = [], []
    keys = []
    for r in rows:
        key = (r["generator"], r["steps"])
        if key not in keys:
            keys.append(key)
    for gen, steps in keys:
        sel = [r for r in rows if r["generator"] == gen and r["steps"] == steps]
        total = sum(r["m"] for r in sel)
        entry = {
            "generator": gen,
            "steps": steps,
            "trials": len(sel),
            "rejection_rate": sum(r["rejections"] for r in sel) / total,
            "one_minus_tv": 1.0 - float(np.mean([r["tv"] for r in sel])),
            "hamming_mean": float(np.mean([r["hamming_mean"] for r in sel])),
            "hamming_sd": float(np.mean([r["hamming_sd"] for r in sel])),
        }
        if gen == "frontier":
            frontier.append(entry)
        else:
            table.append(entry)
    frontier.sort(key=lambda e: e["steps"])
    return table, frontier


def _trial_job(args):
    cfg_dict, trial, null_values, x_input, path = args
    cfg = ExperimentConfig(**cfg_dict)
    rows = run_trial(cfg, trial, null_values, x_input)
    write_trial_csv(Path(path), rows)
    return trial


def cmd_experiment(cfg: ExperimentConfig) -> dict:
    """Run (or resume) all trials and write aggregate CSVs plus a manifest."""
    out = Path(cfg.output or default_output_dir())
    (out / "trials").mkdir(parents=True, exist_ok=True)
    x_input = read_edgelist(cfg.input_path) if cfg.input_path else None

    null_path = out / "null_values.csv"
    if null_path.exists():
        null_values = [float(v) for v in null_path.read_text().split()[1:]]
    else:
        null_values = null_values_for(cfg, x_input)
        null_path.write_text("statistic\n" + "".join(f"{v:.17g}\n" for v in null_values))

    cfg_dict = asdict(cfg)
    todo = []
    for t in range(cfg.trials):
        path = out / "trials" / f"trial_{t:04d}.csv"
        if not path.exists():
            todo.append((cfg_dict, t, null_values, x_input, str(path)))
    if cfg.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            for t in ex.map(_trial_job, todo):
                log.info("trial %d done", t)
    else:
        for job in todo:
            log.info("trial %d done", _trial_job(job))

    rows = []
    for t in range(cfg.trials):
        rows.extend(read_trial_csv(out / "trials" / f"trial_{t:04d}.csv"))
    table, frontier = aggregate(rows)

    with open(out / "rejection_rates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["generator", "steps", "trials", "rejection_rate", "one_minus_tv", "hamming_mean", "hamming_sd"]
        w.writerow(cols)
        for e in table:
            w.writerow([e["generator"]] + [fmt(e[c]) for c in cols[1:]])
    with open(out / "frontier.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "one_minus_tv", "hamming_mean", "hamming_sd"])
        for e in frontier:
            w.writerow([e["steps"], fmt(e["one_minus_tv"]), fmt(e["hamming_mean"]), fmt(e["hamming_sd"])])

    d = cfg.to_dict()
    manifest = {
        "config": d,
        "config_hash": config_hash(d),
        "trial_seeds": [derive_seed(cfg.seed, t) for t in range(cfg.trials)],
        "threshold": mc_threshold(null_values, cfg.alpha),
    }
    _write_json(out / "manifest.json", manifest)
    return {"table": table, "frontier": frontier, "manifest": manifest}


# ---------------------------------------------------------------------------
# assess


def load_samples(samples_dir: str) -> list[Graph]:
    paths = sorted(Path(samples_dir).glob("*.edges"))
    if not paths:
        raise FileNotFoundError(f"no .edges files in {samples_dir}")
    return [read_edgelist(p) for p in paths]


def cmd_assess(
    input_path: str,
    samples_dir: str,
    output: str | None = None,
    statistics=("edges", "two_stars", "triangles"),
    kernel: KernelSpec | None = None,
    M: int = 200,
    alpha: float = 0.05,
    seed: int = 0,
    null_steps: int | None = None,
) -> dict:
    """AgraSSt rejection rate and summaries of external samples against an input graph."""
    x0 = read_edgelist(input_path)
    samples = load_samples(samples_dir)
    bad = [i for i, g in enumerate(samples) if g.n != x0.n]
    if bad:
        raise ValueError(f"samples {bad} do not have n={x0.n} vertices")
    kernel = kernel or KernelSpec()
    table = estimate_table(x0, statistics)
    statistic, null_sampler = agrasst_tester(table, x0, kernel, seed, null_steps)
    rep = calibrate_and_test(statistic, null_sampler, samples, M, alpha)
    input_stat = float(statistic(x0))
    metrics = batch_fidelity_diversity(x0, samples)
    observed = summary_statistics(x0)
    report = {
        "n": x0.n,
        "num_samples": len(samples),
        "statistics": list(table.statistics),
        "kernel": asdict(kernel),
        "M": M,
        "alpha": alpha,
        "seed": seed,
        "threshold": rep.threshold,
        "rejection_rate": rep.rejection_rate,
        "calibration_warning": rep.calibration_warning,
        "input_statistic": input_stat,
        "input_p_value": mc_pvalue(input_stat, rep.null_values),
        "sample_statistics": [r.statistic_value for r in rep.reports],
        "hamming_mean": metrics.scaled_hamming_mean,
        "hamming_sd": metrics.scaled_hamming_sd,
        "tv_degree": metrics.tv_degree,
        "summary_mean": metrics.summary,
        "summary_sd": metrics.summary_sd,
        "observed_summary": observed,
        "summary_delta": {k: metrics.summary[k] - observed[k] for k in SUMMARY_KEYS},
    }
    if output:
        out = Path(output)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "assess_report.json", _jsonable(report))
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return str(obj)
        return float(f"{obj:.12g}")
    return obj


def cmd_stats(input_path: str) -> dict:
    g = read_edgelist(input_path)
    s = summary_statistics(g)
    s["n"] = g.n
    s["edges"] = g.num_edges
    return s
