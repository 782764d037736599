import csv
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.exceptions import EmptyInput
from app.crud.crud_adjacency import load_adjacency, save_adjacency
from app.schemas.pruning import PruneConfig, TicketManifest, TicketSummary
from eeg_glt_tools.glt_pruner import TicketSearch

logger = logging.getLogger(__name__)

MANIFEST_NAME = "tickets.json"
CURVE_NAME = "curve.csv"


def mask_file_name(round_index: int, density: float) -> str:
    return f"round_{round_index}_density_{100 * density:.2f}.mask.csv"


def save_tickets(
        directory,
        search: TicketSearch,
        model: str,
        cfg: PruneConfig,
        subject: Optional[str] = None,
) -> TicketManifest:
    """One binary support CSV per round, the manifest and the accuracy-vs-density curve."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    summaries = []
    for record in search.records:
        name = mask_file_name(record.round, record.density)
        save_adjacency(directory / name, (np.asarray(record.support) != 0).astype(np.float64))
        summaries.append(TicketSummary(
            round=record.round,
            density=record.density,
            remaining_edges=record.remaining_edges,
            best_val_accuracy=record.best_val_accuracy,
            best_epoch=record.best_epoch,
            test_accuracy=record.test_metrics.accuracy if record.test_metrics else None,
            mask_file=name,
        ))

    selected = search.selected
    manifest = TicketManifest(
        subject=subject,
        model=model,
        seed=cfg.seed,
        prune_rate=cfg.prune_rate,
        density_floor=cfg.density_floor,
        ladder=search.ladder,
        rounds=summaries,
        selected_round=selected.round,
        selected_density=selected.density,
        selected_val_accuracy=selected.best_val_accuracy,
    )
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(manifest.model_dump_json(indent=2))
        handle.write("\n")

    with open(directory / CURVE_NAME, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["round", "density", "best_val_accuracy", "best_epoch", "test_accuracy"])
        for s in summaries:
            writer.writerow([s.round, s.density, s.best_val_accuracy, s.best_epoch,
                             "" if s.test_accuracy is None else s.test_accuracy])

    logger.info("Wrote %d ticket masks and manifest to %s.", len(summaries), directory)
    return manifest


def load_manifest(directory) -> TicketManifest:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise EmptyInput(f"No ticket manifest at {path}.")
    return TicketManifest(**json.loads(path.read_text(encoding="utf-8")))


def load_ticket_mask(directory, round_index: Optional[int] = None) -> np.ndarray:
    """Binary support of ``round_index``, defaulting to the selected ticket."""
    manifest = load_manifest(directory)
    wanted = manifest.selected_round if round_index is None else round_index
    for summary in manifest.rounds:
        if summary.round == wanted:
            return load_adjacency(Path(directory) / summary.mask_file)
    raise EmptyInput(f"Manifest in {directory} has no round {wanted}.")
