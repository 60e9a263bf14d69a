"""Command line entry point: ``mhd0 run <config> [--output DIR] [--seed N] [--t-end X] [--grid N]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .driver import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mhd0", description="Compressible non-resistive MHD lab on a periodic box.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config", help="path to a key = value config file")
    p.add_argument("--output", help="output directory (overrides 'output')")
    p.add_argument("--seed", type=int, help="random seed (overrides 'seed')")
    p.add_argument("--t-end", type=float, dest="t_end", help="final time (overrides 't_end')")
    p.add_argument("--grid", type=int, dest="n", help="points per axis (overrides 'n')")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(output=args.output, seed=args.seed,
                                                      t_end=args.t_end, n=args.n)
    except ConfigError as exc:
        logging.getLogger("mhd0").error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
