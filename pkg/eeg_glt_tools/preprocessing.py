# eeg_glt_tools/preprocessing.py
"""
Motor-imagery trial extraction and the per-time-point dataset.

Recording -> 50 Hz notch (zero phase) -> trials labelled from T1/T2 annotations and cut
to t in [1 s, 3 s) -> trial-level stratified split -> every time column becomes one
sample of N x 1 node features, z-scored with train-split statistics.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import filtfilt, iirnotch

from app.core.exceptions import (
    DegenerateSplit,
    EmptyInput,
    EmptySplit,
    InconsistentHeader,
    InvalidConfig,
    InvalidFrequency,
    InvalidLabel,
    MissingAnnotation,
    ShapeMismatch,
    UnknownRun,
    ZeroVarianceChannel,
)
from eeg_glt_tools.edf_reader import EdfRecording

logger = logging.getLogger(__name__)

SAMPLE_RATE_HZ = 160.0
WINDOW_S = (1.0, 3.0)
TASK_LABELS = ("left_fist", "right_fist", "both_fists", "both_feet")
SPLITS = ("train", "val", "test")

# Imagined-movement runs of the motor imagery corpus; T0 (rest) is never a trial.
RUN_EVENT_LABELS: Dict[int, Dict[str, str]] = {
    **{run: {"T1": "left_fist", "T2": "right_fist"} for run in (4, 8, 12)},
    **{run: {"T1": "both_fists", "T2": "both_feet"} for run in (6, 10, 14)},
}


def class_index(task_label: str) -> int:
    try:
        return TASK_LABELS.index(task_label)
    except ValueError:
        raise InvalidLabel(f"Unknown task label '{task_label}'; expected one of {TASK_LABELS}.")


@dataclass
class TrialEpoch:
    subject: Optional[str]
    run: int
    trial: int
    task_label: str
    samples: np.ndarray  # channels x time

    @property
    def label(self) -> int:
        return class_index(self.task_label)

    @property
    def n_columns(self) -> int:
        return self.samples.shape[1]


@dataclass
class TimepointDataset:
    X: np.ndarray  # M x N x 1, normalized
    y: np.ndarray  # M
    split: np.ndarray  # M split tags
    trial_id: np.ndarray  # M, index into ``trials``
    mean: np.ndarray  # N, train-split channel means
    std: np.ndarray  # N, train-split channel standard deviations
    trials: List[TrialEpoch] = field(default_factory=list)
    trial_split: List[str] = field(default_factory=list)
    channel_names: Optional[List[str]] = None

    @property
    def n_nodes(self) -> int:
        return self.X.shape[1]

    def subset(self, tag: str) -> Tuple[np.ndarray, np.ndarray]:
        if tag not in SPLITS:
            raise InvalidConfig(f"Unknown split '{tag}'.")
        keep = self.split == tag
        return self.X[keep], self.y[keep]

    def split_sizes(self) -> Dict[str, int]:
        return {tag: int(np.sum(self.split == tag)) for tag in SPLITS}


# --- Filtering ---

def notch_filter(x: np.ndarray, fs: float = SAMPLE_RATE_HZ, f0: float = 50.0, Q: float = 30.0) -> np.ndarray:
    """Second-order IIR notch at ``f0`` run forward and backward along the last axis."""
    if not 0 < f0 < fs / 2:
        raise InvalidFrequency(f"Notch frequency {f0} Hz must lie in (0, {fs / 2}) for fs={fs} Hz.")
    if Q <= 0:
        raise InvalidFrequency(f"Quality factor must be positive, got {Q}.")
    b, a = iirnotch(f0, Q, fs=fs)
    return filtfilt(b, a, np.asarray(x, dtype=np.float64), axis=-1)


# --- Trials ---

def label_trials(
        rec: EdfRecording,
        run_number: int,
        subject: Optional[str] = None,
        data: Optional[np.ndarray] = None,
        window_s: Tuple[float, float] = WINDOW_S,
) -> List[TrialEpoch]:
    """
    Cuts one labelled epoch per T1/T2 annotation. ``data`` overrides the recording's
    physical samples (e.g. after notch filtering). Trials whose window runs past the
    end of the recording are skipped.
    """
    if run_number not in RUN_EVENT_LABELS:
        raise UnknownRun(f"Run {run_number} is not an imagined-movement run; expected one of {sorted(RUN_EVENT_LABELS)}.")
    if not rec.annotations:
        raise MissingAnnotation(f"Run {run_number} carries no annotations.")

    signals = rec.data_matrix() if data is None else np.asarray(data, dtype=np.float64)
    fs = rec.sample_rate()
    start_offset = int(round(window_s[0] * fs))
    width = int(round((window_s[1] - window_s[0]) * fs))
    mapping = RUN_EVENT_LABELS[run_number]

    epochs: List[TrialEpoch] = []
    for event in rec.annotations:
        code = event.text.strip()
        if code not in mapping:
            continue
        start = int(round(event.onset_s * fs)) + start_offset
        if start + width > signals.shape[1]:
            logger.warning("Run %d: trial at %.2f s ends past the recording; skipped.", run_number, event.onset_s)
            continue
        epochs.append(TrialEpoch(
            subject=subject,
            run=run_number,
            trial=len(epochs),
            task_label=mapping[code],
            samples=signals[:, start:start + width].copy(),
        ))
    if not epochs:
        raise MissingAnnotation(f"Run {run_number} has no T1/T2 trials.")
    return epochs


def load_csv_trials(directory, subject: Optional[str] = None) -> List[TrialEpoch]:
    """
    CSV fallback: one file per trial (rows = time, columns = channels) listed in a
    ``labels.csv`` sidecar with columns ``file,run,label``.
    """
    directory = Path(directory)
    sidecar = directory / "labels.csv"
    if not sidecar.exists():
        raise EmptyInput(f"No labels.csv in {directory}.")
    epochs: List[TrialEpoch] = []
    with open(sidecar, newline="", encoding="utf-8") as handle:
        for line, row in enumerate(csv.DictReader(handle), start=2):
            trial_file, run, label = row.get("file"), row.get("run"), row.get("label")
            if not trial_file or label is None or not (run or "").strip().isdigit():
                raise InconsistentHeader(f"{sidecar}:{line} needs file,run,label columns, got {row}.")
            run = int(run)
            class_index(label)
            try:
                samples = np.loadtxt(directory / trial_file, delimiter=",", ndmin=2)
            except OSError:
                raise EmptyInput(f"Trial file {directory / trial_file} listed in {sidecar} is missing.")
            except ValueError as exc:
                raise InconsistentHeader(f"Trial file {directory / trial_file} is not numeric CSV: {exc}")
            epochs.append(TrialEpoch(
                subject=subject,
                run=run,
                trial=len(epochs),
                task_label=label,
                samples=samples.T.copy(),
            ))
    if not epochs:
        raise EmptyInput(f"labels.csv in {directory} lists no trials.")
    return epochs


# --- Dataset ---

def _split_counts(n: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    n_val = max(1, int(round(ratios[1] * n))) if ratios[1] > 0 else 0
    n_test = max(1, int(round(ratios[2] * n))) if ratios[2] > 0 else 0
    return n - n_val - n_test, n_val, n_test


def assign_splits(labels: Sequence[int], ratios: Sequence[float], seed: int) -> List[str]:
    """
    Stratified trial-level split. Trials are shuffled within each class and
    interleaved class by class, so every prefix of the sequence is balanced to within
    one trial per class; validation takes the first slots, test the next, train the rest.
    """
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    per_class = {c: list(rng.permutation(np.flatnonzero(labels == c))) for c in np.unique(labels)}

    sequence: List[int] = []
    while any(per_class.values()):
        classes = [c for c in per_class if per_class[c]]
        for c in rng.permutation(classes):
            sequence.append(int(per_class[c].pop(0)))

    n_train, n_val, n_test = _split_counts(len(sequence), ratios)
    if n_train < 1:
        raise DegenerateSplit(f"{len(sequence)} trials cannot fill train/val/test at ratios {list(ratios)}.")
    tags = [""] * len(sequence)
    for position, trial in enumerate(sequence):
        tags[trial] = "val" if position < n_val else "test" if position < n_val + n_test else "train"
    return tags


def build_timepoint_dataset(
        epochs: Sequence[TrialEpoch],
        split_ratios: Sequence[float] = (0.70, 0.15, 0.15),
        seed: int = 0,
        channel_names: Optional[List[str]] = None,
) -> TimepointDataset:
    if not epochs:
        raise EmptyInput("No trials to build a dataset from.")
    if len(split_ratios) != 3 or any(r < 0 for r in split_ratios) or abs(sum(split_ratios) - 1.0) > 1e-9:
        raise InvalidConfig(f"split_ratios must be three non-negative fractions summing to 1, got {list(split_ratios)}.")
    n_channels = epochs[0].samples.shape[0]
    if any(e.samples.shape[0] != n_channels for e in epochs):
        raise ShapeMismatch("Trials have different channel counts.")

    trial_split = assign_splits([e.label for e in epochs], split_ratios, seed)
    columns = [e.samples.T for e in epochs]  # time x channels
    raw = np.concatenate(columns, axis=0)
    y = np.concatenate([np.full(e.n_columns, e.label, dtype=int) for e in epochs])
    trial_id = np.concatenate([np.full(e.n_columns, i, dtype=int) for i, e in enumerate(epochs)])
    split = np.asarray(trial_split, dtype=object)[trial_id].astype(str)

    train = raw[split == "train"]
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    flat = np.flatnonzero(std == 0)
    if flat.size:
        raise ZeroVarianceChannel(int(flat[0]))

    X = ((raw - mean) / std)[:, :, None]
    dataset = TimepointDataset(
        X=X, y=y, split=split, trial_id=trial_id, mean=mean, std=std,
        trials=list(epochs), trial_split=trial_split, channel_names=channel_names,
    )
    logger.info("Built dataset: %d trials, %d samples, splits %s.", len(epochs), len(y), dataset.split_sizes())
    return dataset


def pcc_input_signal(dataset: TimepointDataset, subject: Optional[str] = None) -> np.ndarray:
    """Raw (notched, not normalized) train-split windows concatenated in (run, trial) order."""
    chosen = [
        trial for trial, tag in zip(dataset.trials, dataset.trial_split)
        if tag == "train" and (subject is None or trial.subject == subject)
    ]
    if not chosen:
        raise EmptySplit(f"No train-split trials for subject {subject!r}.")
    chosen.sort(key=lambda t: (t.run, t.trial))
    return np.concatenate([t.samples for t in chosen], axis=1)
