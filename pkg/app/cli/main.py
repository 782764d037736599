# app/cli/main.py
"""
Command-line entry point.

Exit codes: 0 success, 2 argument error, 3 data error, 4 numeric failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.cli.commands import adjacency, evaluate, glt, macs, train
from app.core.config import settings
from app.core.exceptions import DataError, GltError
from app.core.logging_config import setup_logging

logger = logging.getLogger(__name__)

COMMANDS = (adjacency, train, glt, evaluate, macs)


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--log-level", default=None, help=f"Root log level (default {settings.LOG_LEVEL}).")
    parser.add_argument("--log-file", default=None, help="Rotating log file; '' disables it.")
    return parser


def _run_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="JSON file mirroring RunConfig; flags override its values.")
    parser.add_argument("--subject", nargs="+", help="Subject identifiers, e.g. S6 S14.")
    parser.add_argument("--model", nargs="+", help="Model letters A-F.")
    parser.add_argument("--method", choices=["geodesic", "pcc", "eeg_glt"])
    parser.add_argument("--data-dir", dest="data_dir")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--layout", help="Electrode layout CSV (name,x,y,z).")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--runs", nargs="+", type=int, help="Imagery runs to load.")
    parser.add_argument("--notch-hz", dest="notch_hz", type=float)
    parser.add_argument("--epochs", type=int, help="Epochs per round (N_ep).")
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--prune-rate", dest="prune_rate", type=float)
    parser.add_argument("--density-floor", dest="density_floor", type=float)
    parser.add_argument("--lambda-max-mode", dest="lambda_max_mode", choices=["fixed_2", "power_iteration"])
    parser.add_argument("--desk-scale", dest="desk_scale", action="store_true",
                        help="Small CI profile; uses the planted task when no recordings exist.")
    parser.add_argument("--jobs", type=int, help="Parallel (subject, model) runs.")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eeg-glt", description=settings.PROJECT_NAME)
    subparsers = parser.add_subparsers(dest="command", required=True)
    common, run_options = _common_parser(), _run_parser()
    for command in COMMANDS:
        command.add_parser(subparsers, [common] if command is macs else [common, run_options])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging(level=args.log_level, log_file=args.log_file)
    try:
        return args.handler(args)
    except GltError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
