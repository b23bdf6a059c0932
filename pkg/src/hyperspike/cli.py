"""Command-line entry point.

    hyperspike count|predict|series|integral|hyperbola|weyl|full
               --config <path> [--out csv|json] [--cache <path>] [--threads N]
               [--output <file>]

Exit codes: 0 success, 2 invalid configuration, 3 cost refusal.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import MODES, ConfigError, CostRefusal, parse_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperspike",
                                     description="exact diagonal-equation counts "
                                                 "vs. density predictions")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", choices=("csv", "json"), default=None,
                       help="override the configured output format")
        p.add_argument("--cache", default=None, help="cache file path")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--output", default=None, help="write report here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = parse_config(fh.read())
        config.mode = args.mode
        if config.mode not in MODES:  # pragma: no cover
            raise ConfigError(f"bad mode {config.mode}")
        if args.out:
            config.output = args.out
        if args.cache:
            config.cache_path = args.cache
        if args.threads:
            config.threads = args.threads
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(config)
    except CostRefusal as exc:
        print(f"cost refusal: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    text = report.render(config.output)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
