import logging
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import EmptyInput
from eeg_glt_tools.graph_core import (
    ElectrodeLayout,
    adjacency_from_csv,
    adjacency_to_csv,
    load_default_layout,
    parse_layout_csv,
)

logger = logging.getLogger(__name__)


def save_adjacency(path, adjacency: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(adjacency_to_csv(adjacency))
    logger.info("Wrote %dx%d adjacency to %s.", adjacency.shape[0], adjacency.shape[1], path)
    return path


def load_adjacency(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise EmptyInput(f"Adjacency file {path} does not exist.")
    return adjacency_from_csv(path.read_text(encoding="utf-8"))


def load_layout(path: Optional[str] = None) -> ElectrodeLayout:
    """Explicit path, else ELECTRODE_LAYOUT_PATH, else the shipped 64-channel layout."""
    path = path or settings.ELECTRODE_LAYOUT_PATH
    if path is None:
        return load_default_layout()
    path = Path(path)
    if not path.exists():
        raise EmptyInput(f"Electrode layout file {path} does not exist.")
    return parse_layout_csv(path.read_text(encoding="utf-8"))
