"""Command-line interface: run experiments, build oracle caches, summarise.

Examples
--------
    sweetspot oracle --benchmark f6 --dim 2 --theta-rule eighth --out cache/
    sweetspot run --benchmark f6 --dim 2 --strategy uncertain \\
        --iters 50 --reps 30 --seed 1 --j 100 --out runs/uncertain
    sweetspot summarise --in runs --out runs
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, oracle
from .benchmarks import REGISTRY, get_benchmark
from .region import SweetSpotShape


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sweetspot")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment")
    run.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    run.add_argument("--benchmark", choices=sorted(REGISTRY))
    run.add_argument("--dim", type=int)
    run.add_argument("--strategy", choices=["centre", "uncertain", "worst", "random"])
    run.add_argument("--iters", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--j", type=int, dest="j_realisations")
    run.add_argument("--m", type=int, dest="m_quality")
    run.add_argument("--theta", type=float)
    run.add_argument("--workers", type=int)
    run.add_argument("--baseline-ei", action="store_true", help="replace the sweet-spot proposer with single-point expected improvement")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--oracle-dir", type=Path, default=None)
    run.add_argument("--out", type=Path, required=True)

    orc = sub.add_parser("oracle", help="build and cache a robust quality landscape")
    orc.add_argument("--benchmark", choices=sorted(REGISTRY), required=True)
    orc.add_argument("--dim", type=int, required=True)
    orc.add_argument("--theta-rule", choices=["eighth"], default="eighth")
    orc.add_argument("--theta", type=float, help="explicit radius overriding the rule")
    orc.add_argument("--resolution", type=int, default=None)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--out", type=Path, default=None, help="cache directory")

    summ = sub.add_parser("summarise", help="aggregate exported run directories")
    summ.add_argument("--in", dest="in_dir", type=Path, required=True)
    summ.add_argument("--out", type=Path, default=None)
    return parser


_CLI_TO_CONFIG = {
    "benchmark": "benchmark",
    "dim": "dim",
    "strategy": "strategy",
    "iters": "iterations",
    "reps": "repetitions",
    "seed": "seed",
    "j_realisations": "j_realisations",
    "m_quality": "m_quality",
    "theta": "theta",
    "workers": "workers",
}


def _run_config(args) -> harness.ExperimentConfig:
    fields: dict = {}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text()))
    for cli_name, cfg_name in _CLI_TO_CONFIG.items():
        value = getattr(args, cli_name, None)
        if value is not None:
            fields[cfg_name] = value
    if args.baseline_ei:
        fields["strategy"] = harness.BASELINE_EI
    missing = [k for k in ("benchmark", "dim", "strategy", "iterations", "repetitions", "seed") if k not in fields]
    if missing:
        raise SystemExit(f"missing required run settings: {', '.join(missing)}")
    return harness.ExperimentConfig(**fields)


def cmd_run(args) -> int:
    config = _run_config(args)
    records = harness.run_experiment(config, oracle_dir=args.oracle_dir)
    written = harness.export(records, args.out, fmt=args.format, config=config)
    summary = harness.summarise(records)
    written += harness.export_summary(summary, args.out)
    for path in written:
        print(path)
    return 0


def cmd_oracle(args) -> int:
    bench = get_benchmark(args.benchmark, args.dim)
    shape = SweetSpotShape(args.theta) if args.theta else SweetSpotShape.eighth_of(bench.bounds)
    resolution = args.resolution
    if resolution is None:
        resolution = harness.DEFAULT_ORACLE_GRID if args.dim <= 2 else harness.DEFAULT_ORACLE_BUDGET
    landscape = oracle.load_or_build(bench, shape, resolution, seed=args.seed, directory=args.out)
    print(f"{args.benchmark} d={args.dim} theta={shape.radius:g}: "
          f"robust optimum q={landscape.q_min:.6g} at {landscape.x_min}")
    return 0


def cmd_summarise(args) -> int:
    in_dir = Path(args.in_dir)
    if (in_dir / "metadata.json").exists():
        run_dirs = [in_dir]
    else:
        run_dirs = sorted(p.parent for p in in_dir.glob("*/metadata.json"))
    if not run_dirs:
        raise SystemExit(f"no exported runs found under {in_dir}")
    records = []
    for d in run_dirs:
        records.extend(harness.load_records(d))
    summary = harness.summarise(records)
    out = args.out or in_dir
    for path in harness.export_summary(summary, out):
        print(path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "oracle":
        return cmd_oracle(args)
    return cmd_summarise(args)


if __name__ == "__main__":
    sys.exit(main())
