# app/cli/commands/macs.py
import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from app.schemas.model import MODEL_SETTINGS, resolve_model
from eeg_glt_tools.glt_pruner import density_schedule
from eeg_glt_tools.macs_analyzer import MacsConvention, macs_row, rows_to_csv, savings_report

logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("macs", parents=parents,
                                   help="Count single-time-point MACs and savings.")
    parser.add_argument("--models", nargs="+", default=sorted(MODEL_SETTINGS), help="Model letters.")
    parser.add_argument("--densities", nargs="+", type=float, default=[1.0], help="Densities in (0, 1].")
    parser.add_argument("--sweep", action="store_true", help="Use every density of the pruning ladder.")
    parser.add_argument("--convention", choices=[c.value for c in MacsConvention],
                        default=MacsConvention.K_MINUS_ONE.value)
    parser.add_argument("--savings", nargs=2, type=float, metavar=("BASELINE", "TICKET"),
                        help="Percent saving between two published MACs totals instead of counting.")
    parser.add_argument("--output", help="CSV path; stdout when omitted.")
    parser.set_defaults(handler=run)


def savings_csv(baseline: float, ticket: float) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["baseline_macs", "ticket_macs", "saving_pct"])
    writer.writerow([baseline, ticket, f"{savings_report(baseline, ticket):.2f}"])
    return buffer.getvalue()


def macs_csv(models, densities, convention: MacsConvention) -> str:
    rows = [macs_row(resolve_model(m), d, convention) for m in models for d in densities]
    return rows_to_csv(rows, convention)


def run(args: argparse.Namespace) -> int:
    if args.savings:
        text = savings_csv(*args.savings)
    else:
        densities = [d for _, _, d in density_schedule()] if args.sweep else args.densities
        text = macs_csv(args.models, densities, MacsConvention(args.convention))
    if args.output:
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info("Wrote MACs report to %s.", path)
    else:
        sys.stdout.write(text)
    return 0
