# app/cli/commands/train.py
import argparse
import logging
from pathlib import Path

from app.cli import deps
from app.core.config import settings
from app.crud import crud_adjacency, crud_checkpoint, crud_runlog
from app.schemas.run import RunConfig
from eeg_glt_tools import chebnet
from eeg_glt_tools.glt_pruner import train_round

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")


def add_parser(subparsers, parents):
    parser = subparsers.add_parser(
        "train", parents=parents,
        help="Train on a fixed adjacency (geodesic, pcc, or the selected eeg_glt ticket).",
    )
    parser.set_defaults(handler=run)


def checkpoint_meta(cfg: RunConfig, spec, method: str, best_epoch: int) -> dict:
    return {
        "model": spec.model_dump(),
        "method": method,
        "seed": cfg.seed,
        "best_epoch": best_epoch,
        "lambda_max_mode": cfg.prune.lambda_max_mode,
    }


def split_reports(net, dataset):
    reports = []
    for split in SPLITS:
        X, y = dataset.subset(split)
        if len(y):
            reports.append((split, chebnet.predict_metrics(net, X, y)))
    return reports


def train_one(cfg: RunConfig) -> Path:
    """Trains one (subject, model, method) run; returns the metrics CSV path."""
    dataset, spec = deps.load_run_dataset(cfg)
    method = cfg.method
    out = deps.output_dir(cfg)
    adjacency = deps.build_adjacency(cfg, dataset, spec.n_nodes)
    crud_adjacency.save_adjacency(out / "adjacency.csv", adjacency)

    net = chebnet.build_model(
        spec,
        seed=cfg.seed,
        adjacency=adjacency,
        adjacency_source="masked" if method == "eeg_glt" else method,
        lambda_max_mode=cfg.prune.lambda_max_mode,
        strict_isolated_nodes=settings.STRICT_ISOLATED_NODES,
    )
    record = train_round(net, None, dataset, cfg.prune,
                         on_epoch=crud_runlog.epoch_logger(out / "runlog.jsonl"),
                         keep_best_params=True)

    crud_checkpoint.save_checkpoint(out / "final.npz", chebnet.state_arrays(net),
                                    checkpoint_meta(cfg, spec, method, record.best_epoch))
    X_train, y_train = dataset.subset("train")
    reports = [("train_final", chebnet.predict_metrics(net, X_train, y_train))]

    chebnet.load_state_arrays(net, record.best_params)
    crud_checkpoint.save_checkpoint(out / "best.npz", record.best_params,
                                    checkpoint_meta(cfg, spec, method, record.best_epoch))
    reports += split_reports(net, dataset)
    path = crud_runlog.save_metrics(out / "metrics.csv", reports)
    for split, report in reports:
        logger.info("%s %s: %s", deps.subject_label(cfg), split, crud_runlog.metrics_summary(report))
    return path


def run(args: argparse.Namespace) -> int:
    configs = deps.expand_runs(args)
    deps.fan_out(train_one, configs, configs[0].jobs)
    return 0
