# app/cli/commands/adjacency.py
import argparse
import logging
from pathlib import Path

from app.cli import deps
from app.crud import crud_adjacency
from app.schemas.run import RunConfig

logger = logging.getLogger(__name__)


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("adjacency", parents=parents, help="Build and save an N x N adjacency CSV.")
    parser.add_argument("--output", help="Explicit CSV path (single run only).")
    parser.set_defaults(handler=run)


def build_one(cfg: RunConfig, output: str = None) -> Path:
    dataset = None
    n_nodes = cfg.model.n_nodes
    if cfg.method == "pcc" or deps.uses_planted_data(cfg):
        dataset, spec = deps.load_run_dataset(cfg)
        n_nodes = spec.n_nodes
    adjacency = deps.build_adjacency(cfg, dataset, n_nodes)
    path = Path(output) if output else deps.output_dir(cfg) / "adjacency.csv"
    return crud_adjacency.save_adjacency(path, adjacency)


def run(args: argparse.Namespace) -> int:
    configs = deps.expand_runs(args)
    for cfg in configs:
        build_one(cfg, args.output if len(configs) == 1 else None)
    return 0
