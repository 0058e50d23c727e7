"""Command-line front end.

    holodrive run <config.json> [--out DIR] [--parallel N] [--seed S]
    holodrive validate <config.json>

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure
(any failed row, or an aborted experiment).  One machine-parsable reason
line goes to stderr on failure.  HOLO_LOG in {error, info, debug} selects
the log level (default error).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    wanted = os.environ.get("HOLO_LOG", "error").lower()
    level = _LOG_LEVELS.get(wanted)
    if level is None:
        print(f"holodrive: config: HOLO_LOG must be one of {sorted(_LOG_LEVELS)}", file=sys.stderr)
        return False
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    return True


def _build_parser():
    parser = argparse.ArgumentParser(prog="holodrive", description="Run holonomic-gate and transmon experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config", help="path to the JSON experiment config")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--parallel", type=int, default=1, help="worker threads for sweep rows")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")

    validate = sub.add_parser("validate", help="validate a config without side effects")
    validate.add_argument("config", help="path to the JSON experiment config")
    return parser


def main(argv=None):
    if not _configure_logging():
        return EXIT_CONFIG
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    from .config import ConfigError, load_config

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"holodrive: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{args.config}: valid ({cfg.experiment})")
        return EXIT_OK

    if args.parallel < 1:
        print("holodrive: config: --parallel must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    from .runner import run_experiment

    try:
        result = run_experiment(cfg, out_dir=args.out, parallel=args.parallel, seed=args.seed)
    except Exception as exc:  # anything past validation is a numerical failure
        print(f"holodrive: numerical: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if result.failures:
        print(f"holodrive: numerical: {result.failures} of {result.rows} rows failed", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {result.csv_path} ({result.rows} rows)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
