# app/cli/commands/glt.py
import argparse
import logging
from pathlib import Path

import numpy as np

from app.cli import deps
from app.core.config import settings
from app.crud import crud_adjacency, crud_runlog, crud_tickets
from app.schemas.run import RunConfig
from eeg_glt_tools import chebnet
from eeg_glt_tools.glt_pruner import find_ticket

logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("glt", parents=parents,
                                   help="Search the graph lottery ticket over the adjacency mask.")
    parser.set_defaults(handler=run)


def glt_one(cfg: RunConfig) -> Path:
    """Runs the ticket search for one (subject, model); returns the tickets directory."""
    cfg = cfg.model_copy(update={"method": "eeg_glt"})
    dataset, spec = deps.load_run_dataset(cfg)
    out = deps.output_dir(cfg)
    net = chebnet.build_model(spec, seed=cfg.seed, trainable_mask=True,
                              lambda_max_mode=cfg.prune.lambda_max_mode,
                              strict_isolated_nodes=settings.STRICT_ISOLATED_NODES)
    search = find_ticket(net, dataset, cfg.prune,
                         on_epoch=crud_runlog.epoch_logger(out / "runlog.jsonl"))

    tickets_dir = out / "tickets"
    crud_tickets.save_tickets(tickets_dir, search, spec.name or "custom", cfg.prune, deps.subject_label(cfg))
    selected = search.selected
    crud_adjacency.save_adjacency(out / "adjacency.csv", (np.asarray(selected.support) != 0).astype(np.float64))
    if selected.test_metrics is not None:
        crud_runlog.save_metrics(out / "metrics.csv", [("test", selected.test_metrics)])
    return tickets_dir


def run(args: argparse.Namespace) -> int:
    configs = deps.expand_runs(args)
    deps.fan_out(glt_one, configs, configs[0].jobs)
    return 0
