"""Command-line entry point.

Example::

    ovrlogit --out results --solvers gd,reference,l1 --seed 15

A ``--config`` file holds ``key = value`` lines (``#`` starts a comment) using
the long flag names without dashes, e.g. ``c-grid = 0.1,0.5,1.0``. Flags given
on the command line override the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigError, OvrLogitError
from .pipeline import ConsistencyConfig, PipelineError, RunConfig, run_pipeline
from .solvers import GdConfig, L1Config

CONFIG_KEYS = {
    "data": "data",
    "label-column": "label_column",
    "seed": "seed",
    "test-fraction": "test_fraction",
    "solvers": "solvers",
    "lr": "lr",
    "iters": "iters",
    "c": "c",
    "c-grid": "c_grid",
    "out": "out",
    "consistency": "consistency",
    "subset-size": "subset_size",
}


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ovrlogit",
        description="One-vs-rest logistic regression experiments (gradient descent, Newton reference, L1).",
    )
    p.add_argument("--config", type=Path, help="key = value file; command-line flags take precedence")
    p.add_argument("--data", type=Path, help="CSV with a header row (default: bundled UCI Wine data)")
    p.add_argument("--label-column", help="name of the integer label column (default: target)")
    p.add_argument("--seed", type=int, help="split seed (default: 15)")
    p.add_argument("--test-fraction", type=float, help="test share of each class (default: 0.2)")
    p.add_argument("--solvers", type=_csv_names, help="subset of gd,reference,l1 (default: all)")
    p.add_argument("--lr", type=float, help="gradient-descent learning rate (default: 0.0001)")
    p.add_argument("--iters", type=int, help="gradient-descent iterations (default: 10000)")
    p.add_argument("--c", type=float, help="inverse L1 strength (default: 0.1)")
    p.add_argument("--c-grid", type=_csv_floats, help="C values for the sparsity sweep")
    p.add_argument("--out", type=Path, help="output directory (default: results)")
    p.add_argument("--consistency", type=_csv_names, help="configs such as gd:1,gd:2,l1:15:0.1")
    p.add_argument("--subset-size", type=int, help="features kept for the cost-benefit subset (default: 5)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def read_config_file(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict keyed by argparse dest names."""
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[CONFIG_KEYS[key]] = value
    return values


def _coerce(parser: argparse.ArgumentParser, dest: str, text: str):
    action = next(a for a in parser._actions if a.dest == dest)
    try:
        return action.type(text) if action.type else text
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"bad value for {dest}: {text!r} ({exc})") from None


def config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    merged = {}
    if args.config is not None:
        for dest, text in read_config_file(args.config).items():
            merged[dest] = _coerce(parser, dest, text)
    for dest in CONFIG_KEYS.values():
        value = getattr(args, dest)
        if value is not None:
            merged[dest] = value

    base = RunConfig()
    changes = {}
    if "data" in merged:
        changes["data_path"] = merged["data"]
    if "out" in merged:
        changes["output_dir"] = merged["out"]
    for key in ("label_column", "seed", "test_fraction", "solvers", "c_grid", "subset_size"):
        if key in merged:
            changes[key] = merged[key]
    if "lr" in merged or "iters" in merged:
        changes["gd"] = dataclasses.replace(
            GdConfig(),
            learning_rate=merged.get("lr", base.gd.learning_rate),
            iterations=merged.get("iters", base.gd.iterations),
        )
    if "c" in merged:
        changes["l1"] = dataclasses.replace(L1Config(), C=merged["c"])
    if "consistency" in merged:
        changes["consistency"] = tuple(ConsistencyConfig.parse(s) for s in merged["consistency"])
    return dataclasses.replace(base, **changes)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args, parser)
        result = run_pipeline(cfg)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except OvrLogitError as exc:
        print(f"error [config] {exc}", file=sys.stderr)
        return 1
    for solver, res in result.solvers.items():
        print(f"{solver:<10} mean test accuracy {res.mean_test_accuracy:.4f}")
    print(f"results written to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
