"""Command-line entry point: ``dyadica run|describe|weight``.

Exit status is 0 on success, 2 when a suite check fails and 1 on usage
or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .core import build_grid
from .experiments import ConfigError, describe, load_config, run_suite
from .io import save_weight
from .weights import power_weight

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyadica", description="Dyadic weighted-norm verification harness.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run every suite section of a config file")
    run.add_argument("--config", required=True)

    desc = sub.add_parser("describe", help="explain one instance of a report")
    desc.add_argument("--report", required=True)
    desc.add_argument("--id", type=int, required=True)

    wt = sub.add_parser("weight", help="write the power weight x**alpha as a weight file")
    wt.add_argument("--power", type=float, required=True)
    wt.add_argument("--depth", type=int, required=True)
    wt.add_argument("--out", required=True)
    return parser


def _run(args) -> int:
    status = EXIT_OK
    for cfg in load_config(args.config):
        result = run_suite(cfg)
        where = cfg.output or "(not written)"
        print(f"{cfg.suite}: {len(result.rows)} rows -> {where}")
        for depth, stats in result.summary.items():
            shown = ", ".join(f"{k}={v:.4g}" for k, v in stats.items())
            print(f"  depth {depth}: {shown}")
        for msg in result.failures:
            print(f"  FAIL {msg}")
        if not result.ok:
            status = EXIT_FAILED
    return status


def _weight(args) -> int:
    w = power_weight(args.power, build_grid(args.depth))
    try:
        save_weight(w, args.out)
    except OSError as exc:
        raise ConfigError(f"cannot write {args.out}: {exc}") from None
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "describe":
            print(describe(args.report, args.id))
            return EXIT_OK
        return _weight(args)
    except (ConfigError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"dyadica: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
