#!/usr/bin/env python3
"""
Cox Stop-Loss - Main Entry Point
================================

Batch pricer for stop-loss contracts on Cox-process losses.

Usage:
    cox-stop-loss price --config configs/a1_constant_exponential.json
    cox-stop-loss es --config configs/poisson_es.json
    cox-stop-loss block --config configs/zero_guard.json --format csv
    python -m src.main validate --seed 7
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .cli import RunOptions, Runner
from .cli.commands import get_registry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cox-stop-loss",
        description="Stop-loss pricing and risk measures for Cox-process losses",
    )
    parser.add_argument("--version", "-v", action="version", version=f"Cox Stop-Loss v{__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON configuration with dotted keys")
    common.add_argument("--seed", type=int, help="master seed (overrides numerics.seed)")
    common.add_argument("--threads", type=int, help="worker threads (overrides numerics.threads)")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--format", "-f", choices=["json", "csv"], help="output format")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log level on stderr (default: WARNING)",
    )
    common.add_argument("--mutate-reindex", action="store_true", help=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_short in get_registry().get_help_table():
        sub.add_parser(name, parents=[common], help=help_short)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    options = RunOptions(
        command=args.command,
        config=args.config,
        seed=args.seed,
        threads=args.threads,
        output=args.output,
        format=args.format,
        mutate_reindex=args.mutate_reindex,
    )
    try:
        return Runner().run(options)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
