"""Command-line entry point: ``voltsync <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, NumericalError
from .runner import PRESETS, run_preset, run_scenario

SUBCOMMAND_ANALYSES = {
    "simulate": ("simulate",),
    "stability": ("stability",),
    "bulk": ("bulk",),
    "return-time": ("return-time",),
    "sweep": None,  # as configured
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voltsync", description="Power-grid synchronization experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default="out", help="output directory (default: ./out)")
        p.add_argument("--dt", type=float, default=None, help="override integrator step")
        p.add_argument("--t-final", type=float, default=None, help="override simulated time span")
        p.add_argument("--workers", type=int, default=None, help="threads for sweep sub-runs")

    for name in SUBCOMMAND_ANALYSES:
        p = sub.add_parser(name, help=f"run the {name} analysis of a TOML config" if name != "sweep"
                           else "run every analysis and sweep point of a TOML config")
        p.add_argument("config", help="path to a TOML scenario file")
        common(p)
    p = sub.add_parser("preset", help="run a packaged figure preset")
    p.add_argument("name", help=f"one of {', '.join(PRESETS)}")
    common(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "preset":
            result = run_preset(args.name, args.out_dir, dt=args.dt, t_final=args.t_final,
                                max_workers=args.workers)
        else:
            result = run_scenario(args.config, args.out_dir, dt=args.dt, t_final=args.t_final,
                                  analyses=SUBCOMMAND_ANALYSES[args.command], max_workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for path in result.files:
        print(path)
    for msg in result.failures:
        print(f"numerical failure: {msg}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
