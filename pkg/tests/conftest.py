import numpy as np
import pytest

from app.schemas.model import ModelSpec
from eeg_glt_tools.edf_reader import Annotation, write_edf
from eeg_glt_tools.synthetic import make_planted_dataset


# --- Random state ---
@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# --- Models ---
@pytest.fixture
def tiny_spec() -> ModelSpec:
    """Two conv layers, one hidden FC layer with batch norm, no dropout: small and deterministic."""
    return ModelSpec(
        name="tiny",
        conv_filters=[3, 4],
        conv_orders=[3, 2],
        fc_nodes=[5, 4],
        n_nodes=5,
        has_bn_fc=True,
        dropout_rate=0.0,
    )


# --- Datasets ---
@pytest.fixture(scope="session")
def planted_task():
    return make_planted_dataset(n_nodes=8, seed=0)


@pytest.fixture
def planted_dataset(planted_task):
    return planted_task.dataset


# --- Output locations ---
@pytest.fixture
def cli_args(tmp_path):
    """Arguments every CLI test passes: a throwaway output root and no log file."""
    return ["--output-dir", str(tmp_path / "out"), "--log-file", ""]


# --- EDF files ---
@pytest.fixture
def edf_factory():
    """Builds EDF bytes with a unit gain so physical values equal digital ones."""

    def _make(n_channels=3, n_records=4, samples_per_record=160, annotations=None, seed=0):
        data_rng = np.random.default_rng(seed)
        digital = data_rng.integers(-2000, 2000, size=(n_channels, n_records * samples_per_record)).astype(np.int16)
        labels = ["Fc5.", "Fc3.", "Fc1.", "Fcz.", "Fc2.", "Fc4.", "Fc6.", "C5.."][:n_channels]
        return digital, write_edf(labels, digital, samples_per_record, annotations=annotations)

    return _make


@pytest.fixture
def motor_annotations():
    return [
        Annotation(onset_s=0.0, duration_s=4.0, text="T0"),
        Annotation(onset_s=4.0, duration_s=4.0, text="T1"),
        Annotation(onset_s=8.0, duration_s=4.0, text="T0"),
        Annotation(onset_s=12.0, duration_s=4.0, text="T2"),
    ]


# --- CSV trials ---
@pytest.fixture
def csv_subject_factory():
    """Writes ``labels.csv`` and one 320 x channels CSV per trial, ``per_class`` trials per run label."""
    labels_by_run = {4: ("left_fist", "right_fist"), 6: ("both_fists", "both_feet"), 8: ("left_fist", "right_fist")}

    def _make(folder, runs=(4, 6), per_class=3, n_channels=8, seed=0):
        data_rng = np.random.default_rng(seed)
        folder.mkdir(parents=True, exist_ok=True)
        rows = []
        for run in runs:
            for label in labels_by_run[run]:
                for _ in range(per_class):
                    name = f"trial{len(rows):02d}.csv"
                    np.savetxt(folder / name, data_rng.standard_normal((320, n_channels)), delimiter=",")
                    rows.append(f"{name},{run},{label}")
        (folder / "labels.csv").write_text("file,run,label\n" + "\n".join(rows) + "\n", encoding="utf-8")
        return rows

    return _make
