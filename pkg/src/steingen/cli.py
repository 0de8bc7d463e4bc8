"""Command-line entry point: ``steingen {generate,experiment,assess,estimate-table,stats}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .estimation import estimate_table
from .experiment import (
    ExperimentConfig,
    _jsonable,
    cmd_assess,
    cmd_experiment,
    cmd_generate,
    cmd_stats,
    default_output_dir,
)
from .graph import read_edgelist
from .kernels import KernelSpec


def _stats(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _steps(text: str) -> int | None:
    return None if text == "auto" else int(text)


def _k(text: str) -> int | None:
    return None if text in ("never", "none") else int(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _override(base: dict, args: argparse.Namespace, names) -> dict:
    out = dict(base)
    for name in names:
        val = getattr(args, name, None)
        if val is not None:
            out[name] = val
    return out


def _kernel_args(p):
    p.add_argument("--kernel", choices=["wl", "gveh", "sp", "constant"], default=None)
    p.add_argument("--wl-levels", type=int, default=None)
    p.add_argument("--bandwidth", type=float, default=None)


def _kernel_from(args, base: dict | None = None) -> dict:
    k = dict(base or {"family": "wl", "wl_levels": 3, "bandwidth": 1.0})
    if args.kernel:
        k["family"] = args.kernel
    if args.wl_levels is not None:
        k["wl_levels"] = args.wl_levels
    if args.bandwidth is not None:
        k["bandwidth"] = args.bandwidth
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steingen", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate graphs from an input edge list")
    p.add_argument("--config")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--stats", type=_stats, default=None)
    p.add_argument("--r", type=_steps, default=None, help="step count or 'auto'")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--variant", choices=["steingen", "steingen_nr", "steingen_k"], default=None)
    p.add_argument("--k", type=_k, default=None, help="re-estimation interval (implies steingen_k)")
    p.add_argument("--record-every", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("experiment", help="rejection-rate and frontier trials")
    p.add_argument("--config")
    p.add_argument("--model", default=None, help="ER, E2S, ET, E2ST or a JSON ErgmSpec file")
    p.add_argument("--input", dest="input_path", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--stats", dest="statistics", type=_stats, default=None)
    p.add_argument("--generators", type=_stats, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--r", dest="steps", type=_steps, default=None)
    p.add_argument("--w", dest="trials", type=int, default=None)
    p.add_argument("--m", dest="samples_per_trial", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frontier", dest="frontier_steps", type=lambda s: tuple(int(v) for v in s.split(",")), default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output", default=None)
    _kernel_args(p)

    p = sub.add_parser("assess", help="AgraSSt assessment of a directory of samples")
    p.add_argument("--config")
    p.add_argument("--input", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--stats", type=_stats, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--null-steps", type=int, default=None)
    _kernel_args(p)

    p = sub.add_parser("estimate-table", help="dump the conditional probability table as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--stats", type=_stats, default=("edges", "two_stars", "triangles"))
    p.add_argument("--output", default=None, help="CSV path (stdout if omitted)")

    p = sub.add_parser("stats", help="network summary statistics as JSON")
    p.add_argument("--input", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "generate":
        conf = _load_config(args.config)
        conf = _override(conf, args, ["output", "m", "seed", "variant", "k", "record_every"])
        if args.stats:
            conf["statistics"] = args.stats
        if args.r is not None or "steps" not in conf:
            conf["steps"] = args.r
        variant = conf.get("variant") or ("steingen_k" if conf.get("k") else "steingen")
        manifest = cmd_generate(
            args.input,
            conf.get("output") or default_output_dir(),
            statistics=conf.get("statistics", ("edges", "two_stars", "triangles")),
            steps=conf.get("steps"),
            m=conf.get("m", 1),
            seed=conf.get("seed", 0),
            variant=variant,
            k=conf.get("k"),
            record_every=conf.get("record_every"),
            jobs=args.jobs,
        )
        print(json.dumps(manifest["runs"][:3] if len(manifest["runs"]) > 3 else manifest["runs"]))
        return 0

    if args.command == "experiment":
        base = _load_config(args.config)
        names = [
            "input_path", "n", "statistics", "generators", "k", "steps", "trials",
            "samples_per_trial", "M", "alpha", "seed", "frontier_steps", "jobs", "output",
        ]
        conf = _override(base, args, names)
        if args.model is not None:
            p = Path(args.model)
            conf["model"] = json.loads(p.read_text()) if p.suffix == ".json" and p.exists() else args.model
        elif conf.get("input_path") and "model" not in base:
            conf["model"] = None
        conf["kernel"] = _kernel_from(args, conf.get("kernel"))
        result = cmd_experiment(ExperimentConfig(**conf))
        for e in result["table"]:
            print(f"{e['generator']:>12s}  rejection={e['rejection_rate']:.3f}  "
                  f"1-TV={e['one_minus_tv']:.3f}  hamming={e['hamming_mean']:.3f}")
        return 0

    if args.command == "assess":
        conf = _load_config(args.config)
        conf = _override(conf, args, ["output", "M", "alpha", "seed", "null_steps"])
        if args.stats:
            conf["statistics"] = args.stats
        report = cmd_assess(
            args.input,
            args.samples,
            output=conf.get("output") or default_output_dir(),
            statistics=conf.get("statistics", ("edges", "two_stars", "triangles")),
            kernel=KernelSpec(**_kernel_from(args, conf.get("kernel"))),
            M=conf.get("M", 200),
            alpha=conf.get("alpha", 0.05),
            seed=conf.get("seed", 0),
            null_steps=conf.get("null_steps"),
        )
        print(f"rejection_rate={report['rejection_rate']:.3f} input_p_value={report['input_p_value']:.3f}")
        return 0

    if args.command == "estimate-table":
        table = estimate_table(read_edgelist(args.input), args.stats)
        text = table.to_csv()
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "stats":
        print(json.dumps(_jsonable(cmd_stats(args.input)), sort_keys=True, indent=2))
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
