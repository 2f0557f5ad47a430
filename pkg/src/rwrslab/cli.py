"""Command-line driver: ``rwrslab --config FILE [--out DIR] [--workers N] [--seed U64]``.

Exit codes: 0 all criteria passed, 1 an acceptance criterion failed,
2 usage or configuration error, 3 the fine-step budget was exceeded.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .brownian import BudgetError
from .config import ConfigError, ExperimentConfig, convert_value, parse_config
from .experiments import RUNNERS, NothingToReport, describe

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwrslab", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, type=Path, help="experiment file in key = value format")
    p.add_argument("--out", type=Path, help="output directory (overrides the file's 'out')")
    p.add_argument("--workers", type=int, help="worker processes (overrides the file's 'workers')")
    p.add_argument("--seed", help="64-bit seed (overrides the file's 'seed')")
    return p


def apply_overrides(cfg: ExperimentConfig, out=None, workers=None, seed=None) -> ExperimentConfig:
    changes = {}
    if out is not None:
        changes["out"] = str(out)
    if workers is not None:
        if workers < 1:
            raise UsageError("--workers must be positive")
        changes["workers"] = workers
    if seed is not None:
        try:
            changes["seed"] = convert_value("seed", str(seed))
        except ValueError as exc:
            raise UsageError(f"--seed: {exc}") from None
    return dataclasses.replace(cfg, **changes)


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment; print a pass/fail line per criterion; return the exit code."""
    cfg = cfg.with_defaults()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary = RUNNERS[cfg.command](cfg, out)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NothingToReport, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for name, c in summary["criteria"].items():
        print(describe(f"{cfg.command}.{name}", c))
    return EXIT_PASS if summary["pass"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = parse_config(args.config.read_text())
        cfg = apply_overrides(cfg, args.out, args.workers, args.seed)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
