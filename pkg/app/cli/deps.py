# app/cli/deps.py
"""Shared command plumbing: run configuration, output paths, datasets and adjacencies."""

import argparse
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import EmptyInput, InvalidConfig
from app.crud import crud_adjacency, crud_dataset, crud_tickets
from app.schemas.model import ModelSpec, resolve_model
from app.schemas.pruning import PruneConfig
from app.schemas.run import RunConfig
from eeg_glt_tools.graph_core import (
    complete_graph,
    geodesic_adjacency,
    layout_for_channels,
    masked_adjacency,
    pcc_adjacency,
)
from eeg_glt_tools.preprocessing import TimepointDataset, build_timepoint_dataset, pcc_input_signal
from eeg_glt_tools.synthetic import make_planted_dataset, subject_code

logger = logging.getLogger(__name__)

PLANTED_SUBJECT = "planted"
DESK_NODES = 8

T = TypeVar("T")

# CLI flag -> PruneConfig field
_PRUNE_FLAGS = {
    "epochs": "epochs_per_round",
    "batch_size": "batch_size",
    "learning_rate": "learning_rate",
    "prune_rate": "prune_rate",
    "density_floor": "density_floor",
    "lambda_max_mode": "lambda_max_mode",
}


def _read_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    path = Path(path)
    if not path.exists():
        raise InvalidConfig(f"Config file {path} does not exist.")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"Config file {path} is not valid JSON: {exc}.")


def run_config_from_args(args: argparse.Namespace, subject=None, model=None) -> RunConfig:
    """JSON config file first, then every flag that was given on the command line."""
    values = _read_config_file(getattr(args, "config", None))
    prune_values = dict(values.pop("prune", {}) or {})
    desk_scale = bool(getattr(args, "desk_scale", False) or values.get("desk_scale", False))

    for flag in ("method", "data_dir", "output_dir", "layout", "seed", "notch_hz", "runs", "jobs"):
        value = getattr(args, flag, None)
        if value is not None:
            values["layout_path" if flag == "layout" else flag] = value
    if subject is not None:
        values["subject"] = subject
    if model is not None:
        values["model"] = model
    values["desk_scale"] = desk_scale

    for flag, field_name in _PRUNE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            prune_values[field_name] = value
    seed = values.get("seed", settings.DEFAULT_SEED)
    values["seed"] = seed
    prune_values["seed"] = seed
    prune_values.setdefault("lambda_max_mode", settings.LAMBDA_MAX_MODE)
    try:
        prune = PruneConfig.desk_scale(**prune_values) if desk_scale else PruneConfig(**prune_values)
        values["prune"] = prune.check()
        cfg = RunConfig(**values)
    except ValidationError as exc:
        raise InvalidConfig(f"Invalid run configuration: {exc}")
    cfg.model = resolve_model(cfg.model)
    return cfg


def expand_runs(args: argparse.Namespace) -> List[RunConfig]:
    """One RunConfig per (subject, model) pair named on the command line."""
    subjects = getattr(args, "subject", None) or [None]
    models = getattr(args, "model", None) or [None]
    return [run_config_from_args(args, subject=s, model=m) for s in subjects for m in models]


def data_dir(cfg: RunConfig) -> Path:
    return Path(cfg.data_dir or settings.EEG_GLT_DATA_DIR)


def uses_planted_data(cfg: RunConfig) -> bool:
    """Desk-scale runs fall back to the planted task when the subject has no recordings."""
    if not cfg.desk_scale:
        return False
    if cfg.subject is None:
        return True
    return not (data_dir(cfg) / subject_code(cfg.subject)).exists()


def subject_label(cfg: RunConfig) -> str:
    if uses_planted_data(cfg):
        return PLANTED_SUBJECT
    return subject_code(cfg.subject) if cfg.subject is not None else "all"


def output_dir(cfg: RunConfig, method: Optional[str] = None) -> Path:
    """``<output root>/<subject>/<model>/<method>/``"""
    spec: ModelSpec = cfg.model
    root = Path(cfg.output_dir or settings.EEG_GLT_OUTPUT_DIR)
    path = root / subject_label(cfg) / (spec.name or "custom") / (method or cfg.method)
    path.mkdir(parents=True, exist_ok=True)
    return path


def desk_spec(spec: ModelSpec, n_nodes: int) -> ModelSpec:
    """Same depth and orders on a small graph with narrow layers."""
    return spec.shrunk(
        n_nodes,
        conv_filters=[min(f, 16) for f in spec.conv_filters],
        fc_hidden=[min(h, 32) for h in spec.fc_nodes[:-1]],
    ).check()


def dataset_source(cfg: RunConfig) -> dict:
    """Everything the cached dataset of a subject depends on, in JSON-comparable form."""
    csv_input = crud_dataset.has_csv_trials(data_dir(cfg), cfg.subject)
    return {
        "subject": subject_code(cfg.subject),
        "format": "csv" if csv_input else "edf",
        "runs": [int(r) for r in cfg.runs],
        "notch_hz": None if csv_input else float(cfg.notch_hz),
        "split_ratios": [float(r) for r in cfg.split_ratios],
        "seed": int(cfg.seed),
    }


def load_run_dataset(cfg: RunConfig) -> Tuple[TimepointDataset, ModelSpec]:
    """Dataset of the run and the model spec sized to it."""
    spec: ModelSpec = cfg.model
    if uses_planted_data(cfg):
        task = make_planted_dataset(n_nodes=DESK_NODES, n_classes=spec.n_classes, seed=cfg.seed,
                                    split_ratios=cfg.split_ratios)
        return task.dataset, desk_spec(spec, DESK_NODES)

    if cfg.subject is None:
        raise InvalidConfig("A subject is required unless --desk-scale is given.")
    cache = Path(cfg.output_dir or settings.EEG_GLT_OUTPUT_DIR) / subject_code(cfg.subject) / f"dataset_seed{cfg.seed}.npz"
    source = dataset_source(cfg)
    cached = crud_dataset.cached_source(cache)
    if cached == source:
        dataset = crud_dataset.load_dataset(cache)
    else:
        if cache.exists():
            logger.info("Dataset cache %s was built from other settings (%s); rebuilding.", cache, cached)
        if source["format"] == "csv":
            epochs, names = crud_dataset.load_subject_csv_trials(data_dir(cfg), cfg.subject, cfg.runs), None
        else:
            epochs, names = crud_dataset.load_subject_epochs(data_dir(cfg), cfg.subject, cfg.runs, cfg.notch_hz)
        dataset = build_timepoint_dataset(epochs, cfg.split_ratios, cfg.seed, channel_names=names)
        crud_dataset.save_dataset(cache, dataset, source)
    if cfg.desk_scale:
        spec = desk_spec(spec, dataset.n_nodes)
    elif dataset.n_nodes != spec.n_nodes:
        spec = spec.shrunk(dataset.n_nodes)
    return dataset, spec


def geodesic_for(cfg: RunConfig, dataset: Optional[TimepointDataset], n_nodes: int) -> np.ndarray:
    layout = crud_adjacency.load_layout(cfg.layout_path)
    if dataset is not None and dataset.channel_names:
        matched = layout_for_channels(layout, dataset.channel_names)
        if matched is None:
            raise EmptyInput("The electrode layout does not cover every recorded channel.")
        layout = matched
    elif len(layout.names) != n_nodes:
        layout = layout_for_channels(layout, layout.names[:n_nodes])
    return geodesic_adjacency(layout).adjacency


def build_adjacency(cfg: RunConfig, dataset: Optional[TimepointDataset], n_nodes: int,
                    method: Optional[str] = None) -> np.ndarray:
    method = method or cfg.method
    if method == "geodesic":
        return geodesic_for(cfg, dataset, n_nodes)
    if method == "pcc":
        if dataset is None:
            raise InvalidConfig("PCC adjacency needs a subject's training split.")
        return pcc_adjacency(pcc_input_signal(dataset)).adjacency
    if method == "eeg_glt":
        tickets_dir = output_dir(cfg, "eeg_glt") / "tickets"
        support = crud_tickets.load_ticket_mask(tickets_dir)
        return masked_adjacency(complete_graph(support.shape[0]), support).adjacency
    raise InvalidConfig(f"Unknown adjacency method '{method}'.")


def fan_out(fn: Callable[[RunConfig], T], configs: List[RunConfig], jobs: int = 1) -> List[T]:
    """Runs ``fn`` over independent (subject, model) configurations, in processes when jobs > 1."""
    if jobs <= 1 or len(configs) <= 1:
        return [fn(cfg) for cfg in configs]
    logger.info("Running %d jobs on %d workers.", len(configs), jobs)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, configs))
