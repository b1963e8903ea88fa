"""Command line entry point: ``swiptmc run <experiment> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, ScenarioConfig, load_config
from .experiments import EXPERIMENTS, SelfCheckError, run_experiment
from .interference import InversionError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swiptmc",
                                description="SWIPT network trade-off and outage experiments")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment and write CSV curves")
    run.add_argument("experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--config", help="flat key = value configuration file")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--trials", type=int, help="Monte Carlo trials per scenario")
    run.add_argument("--seed", type=int, help="base seed")
    run.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
    except (ConfigError, OSError) as exc:
        parser.error(str(exc))
    if args.trials is not None and args.trials < 1:
        parser.error("--trials must be >= 1")
    try:
        manifest = run_experiment(args.experiment, cfg, args.out, args.trials, args.seed)
    except (InversionError, SelfCheckError, ArithmeticError, RuntimeError) as exc:
        print(f"swiptmc: {args.experiment} failed: {exc}", file=sys.stderr)
        return 1
    print(f"{args.experiment}: wrote {len(manifest['files'])} curves to {args.out} "
          f"in {manifest['runtime_s']:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
