import argparse
import logging
import os
import sys
import time

import numpy as np

# --- Pre-run Setup: Add project root to path ---
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.logging_config import setup_logging
from app.schemas.model import resolve_model
from app.schemas.pruning import PruneConfig
from app.cli.deps import DESK_NODES, desk_spec
from eeg_glt_tools import chebnet
from eeg_glt_tools.glt_pruner import find_ticket
from eeg_glt_tools.synthetic import make_planted_dataset

logger = logging.getLogger("desk_scale_glt")


def planted_edge_rank(mask_values, planted_mask) -> float:
    """Mean percentile of the planted entries among all off-diagonal |mask| values."""
    magnitudes = np.abs(mask_values)
    off_diagonal = magnitudes[~np.eye(magnitudes.shape[0], dtype=bool)]
    ranks = [np.mean(off_diagonal < magnitudes[i, j]) for i, j in zip(*np.nonzero(planted_mask))]
    return float(np.mean(ranks)) if ranks else 0.0


def main():
    parser = argparse.ArgumentParser(description="Ticket search on the planted 8-node task.")
    parser.add_argument("--model", default="D")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=30)
    args = parser.parse_args()

    setup_logging(log_file="")
    task = make_planted_dataset(n_nodes=DESK_NODES, seed=args.seed)
    spec = desk_spec(resolve_model(args.model), DESK_NODES)
    cfg = PruneConfig.desk_scale(epochs_per_round=args.epochs, seed=args.seed)
    net = chebnet.build_model(spec, seed=args.seed, trainable_mask=True)

    started = time.time()
    search = find_ticket(net, task.dataset, cfg)
    logger.info("Search took %.1f s.", time.time() - started)

    for record in search.records:
        logger.info("round %2d  density %6.2f%%  val acc %.4f  planted rank %.2f",
                    record.round, 100 * record.density, record.best_val_accuracy,
                    planted_edge_rank(record.mask_snapshot, task.planted_mask()))
    selected = search.selected
    logger.info("Selected round %d at density %.2f%% (val acc %.4f, dense %.4f).",
                selected.round, 100 * selected.density, selected.best_val_accuracy,
                search.records[0].best_val_accuracy)


if __name__ == "__main__":
    main()
