import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import EmptyInput, InconsistentHeader
from eeg_glt_tools.edf_reader import read_edf
from eeg_glt_tools.preprocessing import TimepointDataset, TrialEpoch, label_trials, load_csv_trials, notch_filter
from eeg_glt_tools.synthetic import subject_code

logger = logging.getLogger(__name__)

# Bumped whenever the .npz layout below changes.
DATASET_CACHE_VERSION = 2


def run_path(data_dir, subject, run: int) -> Path:
    code = subject_code(subject)
    return Path(data_dir) / code / f"{code}R{run:02d}.edf"


def load_subject_epochs(
        data_dir,
        subject,
        runs: Sequence[int],
        notch_hz: Optional[float] = 50.0,
) -> Tuple[List[TrialEpoch], List[str]]:
    """Reads, notch-filters and labels every requested run of one subject."""
    epochs: List[TrialEpoch] = []
    channel_names: Optional[List[str]] = None
    code = subject_code(subject)
    for run in runs:
        path = run_path(data_dir, subject, run)
        if not path.exists():
            raise EmptyInput(f"Missing recording {path}.")
        rec = read_edf(path)
        if channel_names is None:
            channel_names = rec.channel_names
        elif rec.channel_names != channel_names:
            raise InconsistentHeader(f"{path} lists channels in a different order than earlier runs.")
        data = rec.data_matrix()
        if notch_hz:
            data = notch_filter(data, fs=rec.sample_rate(), f0=notch_hz)
        run_epochs = label_trials(rec, run, subject=code, data=data)
        for epoch in run_epochs:
            epoch.trial = len(epochs)
            epochs.append(epoch)
        logger.info("%s run %d: %d trials.", code, run, len(run_epochs))
    if not epochs:
        raise EmptyInput(f"No trials loaded for {code}.")
    return epochs, channel_names or []


def subject_dir(data_dir, subject) -> Path:
    return Path(data_dir) / subject_code(subject)


def has_csv_trials(data_dir, subject) -> bool:
    """A ``labels.csv`` sidecar in the subject directory selects the CSV trial format."""
    return (subject_dir(data_dir, subject) / "labels.csv").exists()


def load_subject_csv_trials(data_dir, subject, runs: Sequence[int]) -> List[TrialEpoch]:
    """CSV trials of the requested runs. They are taken as already filtered and windowed."""
    code = subject_code(subject)
    wanted = set(runs)
    epochs = [e for e in load_csv_trials(subject_dir(data_dir, subject), subject=code) if e.run in wanted]
    if not epochs:
        raise EmptyInput(f"No CSV trials of runs {sorted(wanted)} for {code}.")
    for index, epoch in enumerate(epochs):
        epoch.trial = index
    logger.info("%s: %d CSV trials.", code, len(epochs))
    return epochs


def save_dataset(path, dataset: TimepointDataset, source: Optional[dict] = None) -> Path:
    """``source`` records the settings the dataset was built from; see ``cached_source``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trials = dataset.trials
    with open(path, "wb") as handle:
        np.savez(
            handle,
            version=np.asarray(DATASET_CACHE_VERSION),
            X=dataset.X,
            y=dataset.y,
            split=dataset.split.astype(str),
            trial_id=dataset.trial_id,
            mean=dataset.mean,
            std=dataset.std,
            trial_samples=np.stack([t.samples for t in trials]) if trials else np.zeros((0, 0, 0)),
            trial_run=np.asarray([t.run for t in trials], dtype=int),
            trial_index=np.asarray([t.trial for t in trials], dtype=int),
            trial_label=np.asarray([t.task_label for t in trials], dtype=str),
            trial_subject=np.asarray([t.subject or "" for t in trials], dtype=str),
            trial_split=np.asarray(dataset.trial_split, dtype=str),
            channel_names=np.asarray(dataset.channel_names or [], dtype=str),
            source=np.asarray(json.dumps(source or {}, sort_keys=True)),
        )
    logger.info("Cached dataset (%d samples) at %s.", len(dataset.y), path)
    return path


def load_dataset(path) -> TimepointDataset:
    path = Path(path)
    if not path.exists():
        raise EmptyInput(f"Dataset cache {path} does not exist.")
    with np.load(path, allow_pickle=False) as bundle:
        version = int(bundle["version"])
        if version != DATASET_CACHE_VERSION:
            raise InconsistentHeader(f"Dataset cache version {version}, expected {DATASET_CACHE_VERSION}.")
        trials = [
            TrialEpoch(subject=subject or None, run=int(run), trial=int(index), task_label=str(label),
                       samples=samples.copy())
            for samples, run, index, label, subject in zip(
                bundle["trial_samples"], bundle["trial_run"], bundle["trial_index"],
                bundle["trial_label"], bundle["trial_subject"])
        ]
        names = [str(n) for n in bundle["channel_names"]]
        return TimepointDataset(
            X=bundle["X"].copy(),
            y=bundle["y"].copy(),
            split=bundle["split"].astype(str),
            trial_id=bundle["trial_id"].copy(),
            mean=bundle["mean"].copy(),
            std=bundle["std"].copy(),
            trials=trials,
            trial_split=[str(s) for s in bundle["trial_split"]],
            channel_names=names or None,
        )


def cached_source(path) -> Optional[dict]:
    """Build settings stored in a cache, or None when there is no usable cache at ``path``."""
    path = Path(path)
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as bundle:
        if "version" not in bundle.files or int(bundle["version"]) != DATASET_CACHE_VERSION:
            return None
        if "source" not in bundle.files:
            return None
        return json.loads(str(bundle["source"]))
