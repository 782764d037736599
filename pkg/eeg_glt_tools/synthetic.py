# eeg_glt_tools/synthetic.py
"""
Synthetic data for desk-scale runs and tests.

``make_planted_dataset`` plants class information on a fixed subset of edges: the
endpoints of every informative edge carry a class-dependent offset, every other node
only noise. ``write_surrogate_subject`` writes EDF+ files laid out like the public
motor imagery corpus, so the file-based commands can run without downloading it.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import InvalidConfig
from eeg_glt_tools.edf_reader import Annotation, write_edf
from eeg_glt_tools.graph_core import load_default_layout
from eeg_glt_tools.preprocessing import (
    RUN_EVENT_LABELS,
    SAMPLE_RATE_HZ,
    TASK_LABELS,
    TimepointDataset,
    TrialEpoch,
    build_timepoint_dataset,
)

logger = logging.getLogger(__name__)

CLASS_AMPLITUDES = (-3.0, -1.0, 1.0, 3.0)


@dataclass
class PlantedTask:
    dataset: TimepointDataset
    planted_edges: List[Tuple[int, int]]  # (i, j) with i < j

    def planted_mask(self) -> np.ndarray:
        n = self.dataset.n_nodes
        mask = np.zeros((n, n))
        for i, j in self.planted_edges:
            mask[i, j] = mask[j, i] = 1.0
        return mask


def make_planted_dataset(
        n_nodes: int = 8,
        n_classes: int = 4,
        trials_per_class: int = 10,
        columns_per_trial: int = 20,
        informative_fraction: float = 0.2,
        noise: float = 0.3,
        seed: int = 0,
        split_ratios: Sequence[float] = (0.70, 0.15, 0.15),
) -> PlantedTask:
    if n_classes > len(CLASS_AMPLITUDES) or n_classes < 2:
        raise InvalidConfig(f"n_classes must lie in [2, {len(CLASS_AMPLITUDES)}], got {n_classes}.")
    if not 0 < informative_fraction <= 1:
        raise InvalidConfig(f"informative_fraction must lie in (0, 1], got {informative_fraction}.")

    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    n_planted = max(1, int(round(informative_fraction * len(pairs))))
    planted = sorted(pairs[k] for k in rng.choice(len(pairs), size=n_planted, replace=False))
    endpoints = np.zeros(n_nodes)
    for i, j in planted:
        endpoints[i] = endpoints[j] = 1.0

    epochs: List[TrialEpoch] = []
    for c in range(n_classes):
        for _ in range(trials_per_class):
            samples = noise * rng.standard_normal((n_nodes, columns_per_trial))
            samples += CLASS_AMPLITUDES[c] * endpoints[:, None]
            epochs.append(TrialEpoch(subject="planted", run=0, trial=len(epochs),
                                     task_label=TASK_LABELS[c], samples=samples))

    dataset = build_timepoint_dataset(epochs, split_ratios, seed)
    logger.info("Planted task: %d nodes, %d informative edges.", n_nodes, n_planted)
    return PlantedTask(dataset=dataset, planted_edges=planted)


def surrogate_trials(
        n_channels: int,
        run: int,
        n_trials: int,
        rng: np.random.Generator,
        fs: float = SAMPLE_RATE_HZ,
        trial_s: float = 4.0,
) -> Tuple[np.ndarray, List[Annotation]]:
    """
    Continuous physical signal plus T0/T1/T2 annotations for one run. Each class drives
    a different channel group at its own frequency on top of a shared background.
    """
    codes = ["T1", "T2"] * ((n_trials + 1) // 2)
    codes = [str(code) for code in rng.permutation(codes[:n_trials])]
    samples_per_trial = int(trial_s * fs)
    total = samples_per_trial * (2 * n_trials + 1)
    t = np.arange(total) / fs
    background = rng.standard_normal((1, total))
    signal = 5.0 * rng.standard_normal((n_channels, total)) + 20.0 * background

    annotations: List[Annotation] = []
    for k, code in enumerate(codes):
        rest_start = 2 * k * trial_s
        annotations.append(Annotation(onset_s=rest_start, duration_s=trial_s, text="T0"))
        onset = rest_start + trial_s
        annotations.append(Annotation(onset_s=onset, duration_s=trial_s, text=code))
        c = TASK_LABELS.index(RUN_EVENT_LABELS[run][code])
        group = np.arange(n_channels) % len(TASK_LABELS) == c
        lo, hi = int(onset * fs), int((onset + trial_s) * fs)
        signal[group, lo:hi] += 40.0 * np.sin(2 * np.pi * (8.0 + 4.0 * c) * t[lo:hi])
    return signal, annotations


def surrogate_edf_bytes(
        run: int,
        channel_names: Sequence[str],
        n_trials: int = 8,
        seed: int = 0,
        physical_limit: float = 1000.0,
) -> bytes:
    rng = np.random.default_rng(seed)
    signal, annotations = surrogate_trials(len(channel_names), run, n_trials, rng)
    gain = 2 * physical_limit / 65535.0
    digital = np.clip(np.round((signal + physical_limit) / gain - 32768), -32768, 32767).astype(np.int16)
    fs = int(SAMPLE_RATE_HZ)
    n_records = digital.shape[1] // fs
    digital = digital[:, :n_records * fs]
    labels = [name.ljust(4, ".") for name in channel_names]
    return write_edf(labels, digital, samples_per_record=fs,
                     physical_range=(-physical_limit, physical_limit),
                     annotations=annotations)


def subject_code(subject) -> str:
    """'6', 6, 'S6' and 'S006' all map to 'S006'."""
    text = str(subject).upper().lstrip("S")
    if not text.isdigit():
        raise InvalidConfig(f"Subject identifier {subject!r} is not of the form S<number>.")
    return f"S{int(text):03d}"


def write_surrogate_subject(
        data_dir,
        subject,
        runs: Sequence[int] = (4, 6, 8, 10, 12, 14),
        n_channels: Optional[int] = None,
        n_trials: int = 8,
        seed: int = 0,
) -> List[Path]:
    """Writes ``<data_dir>/S00k/S00kRrr.edf`` for each run; returns the paths."""
    names = load_default_layout().names
    names = names[:n_channels] if n_channels else names
    code = subject_code(subject)
    folder = Path(data_dir) / code
    folder.mkdir(parents=True, exist_ok=True)
    paths = []
    for offset, run in enumerate(runs):
        path = folder / f"{code}R{run:02d}.edf"
        path.write_bytes(surrogate_edf_bytes(run, names, n_trials=n_trials, seed=seed * 100 + offset))
        paths.append(path)
    logger.info("Wrote %d surrogate runs for %s under %s.", len(paths), code, folder)
    return paths
