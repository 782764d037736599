import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import EmptyInput

logger = logging.getLogger(__name__)

_META_KEY = "__meta__"


def save_checkpoint(path, arrays: Dict[str, np.ndarray], meta: Optional[dict] = None) -> Path:
    """Parameter name -> array as an uncompressed .npz; ``meta`` is stored as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {name: np.asarray(value) for name, value in arrays.items()}
    payload[_META_KEY] = np.asarray(json.dumps(meta or {}, sort_keys=True))
    with open(path, "wb") as handle:
        np.savez(handle, **payload)
    logger.info("Saved checkpoint with %d arrays to %s.", len(arrays), path)
    return path


def load_checkpoint(path) -> Tuple[Dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise EmptyInput(f"Checkpoint {path} does not exist.")
    with np.load(path, allow_pickle=False) as bundle:
        arrays = {name: bundle[name].copy() for name in bundle.files if name != _META_KEY}
        meta = json.loads(str(bundle[_META_KEY])) if _META_KEY in bundle.files else {}
    return arrays, meta

