# app/cli/commands/evaluate.py
import argparse
import logging
from pathlib import Path

from app.cli import deps
from app.core.config import settings
from app.core.exceptions import InvalidConfig
from app.crud import crud_adjacency, crud_checkpoint, crud_runlog, crud_tickets
from app.schemas.model import ModelSpec
from app.schemas.run import RunConfig
from eeg_glt_tools import chebnet
from eeg_glt_tools.graph_core import complete_graph, masked_adjacency

logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("evaluate", parents=parents,
                                   help="Evaluate a saved checkpoint on a split.")
    parser.add_argument("--checkpoint", help="Checkpoint .npz; defaults to best.npz of the run.")
    parser.add_argument("--adjacency-file", help="Adjacency CSV; defaults to adjacency.csv of the run.")
    parser.add_argument("--tickets", help="Tickets directory; evaluates on a ticket mask instead.")
    parser.add_argument("--round", type=int, help="Ticket round (default: the selected ticket).")
    parser.add_argument("--split", choices=["train", "val", "test"], default="test")
    parser.add_argument("--output", help="Metrics CSV path.")
    parser.set_defaults(handler=run)


def evaluate_one(cfg: RunConfig, args: argparse.Namespace) -> Path:
    out = deps.output_dir(cfg)
    arrays, meta = crud_checkpoint.load_checkpoint(args.checkpoint or out / "best.npz")
    if "model" not in meta:
        raise InvalidConfig("Checkpoint carries no model description.")
    spec = ModelSpec(**meta["model"]).check()

    if args.tickets:
        support = crud_tickets.load_ticket_mask(args.tickets, args.round)
        adjacency = masked_adjacency(complete_graph(support.shape[0]), support).adjacency
    else:
        adjacency = crud_adjacency.load_adjacency(args.adjacency_file or out / "adjacency.csv")

    dataset, _ = deps.load_run_dataset(cfg)
    net = chebnet.build_model(spec, seed=cfg.seed, adjacency=adjacency,
                              lambda_max_mode=meta.get("lambda_max_mode", cfg.prune.lambda_max_mode),
                              strict_isolated_nodes=settings.STRICT_ISOLATED_NODES)
    chebnet.load_state_arrays(net, arrays)
    X, y = dataset.subset(args.split)
    report = chebnet.predict_metrics(net, X, y)
    logger.info("%s %s: %s", deps.subject_label(cfg), args.split, crud_runlog.metrics_summary(report))
    return crud_runlog.save_metrics(args.output or out / f"evaluate_{args.split}.csv", [(args.split, report)])


def run(args: argparse.Namespace) -> int:
    for cfg in deps.expand_runs(args):
        evaluate_one(cfg, args)
    return 0
