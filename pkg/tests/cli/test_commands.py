import csv
import json

import numpy as np
import pytest

from app.cli import deps
from app.cli.main import build_parser, main
from app.core.exceptions import InvalidConfig
from app.crud import crud_adjacency, crud_dataset, crud_runlog, crud_tickets
from app.schemas.model import MODEL_SETTINGS, PUBLISHED_DENSE_MACS
from eeg_glt_tools.glt_pruner import density_schedule
from eeg_glt_tools.synthetic import write_surrogate_subject


def read_macs_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# convention=")
    return list(csv.DictReader(lines[1:]))


def run_dir(tmp_path, subject, model, method):
    return tmp_path / "out" / subject / model / method


# --- macs ---
def test_macs_reports_every_model_with_reference_totals(tmp_path):
    output = tmp_path / "macs.csv"
    assert main(["macs", "--output", str(output), "--log-file", ""]) == 0
    rows = read_macs_csv(output)
    assert [r["model"] for r in rows] == sorted(MODEL_SETTINGS)
    for row in rows:
        assert float(row["reference_total"]) == PUBLISHED_DENSE_MACS[row["model"]]
        assert int(row["total"]) == (int(row["graph_macs"]) + int(row["proj_macs"])
                                     + int(row["bias_bn_macs"]) + int(row["fc_macs"]))


def test_macs_sweep_covers_the_ladder(tmp_path):
    output = tmp_path / "sweep.csv"
    assert main(["macs", "--models", "D", "--sweep", "--convention", "k_products",
                 "--output", str(output), "--log-file", ""]) == 0
    rows = read_macs_csv(output)
    assert len(rows) == 20
    assert output.read_text(encoding="utf-8").startswith("# convention=k_products")
    graph = [int(r["graph_macs"]) for r in rows]
    assert graph == sorted(graph, reverse=True)


def test_macs_savings_of_published_totals(tmp_path):
    output = tmp_path / "savings.csv"
    assert main(["macs", "--savings", "291.62e6", "8.76e6", "--output", str(output), "--log-file", ""]) == 0
    rows = list(csv.DictReader(output.read_text(encoding="utf-8").splitlines()))
    assert rows[0]["saving_pct"] == "97.00"


def test_macs_writes_to_stdout_by_default(capsys):
    assert main(["macs", "--models", "D", "--log-file", ""]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# convention=k_minus_one calibration=uncalibrated worst_deviation_pct=")
    assert out.splitlines()[2].startswith("D,1.0,")


# --- argument and data errors ---
def test_unknown_model_exits_with_argument_error(cli_args):
    assert main(["adjacency", "--method", "geodesic", "--model", "Z", *cli_args]) == 2


def test_unknown_method_is_rejected_by_the_parser(cli_args):
    assert main(["adjacency", "--method", "spectral", *cli_args]) == 2


def test_bad_prune_rate_exits_with_argument_error(cli_args):
    assert main(["glt", "--desk-scale", "--prune-rate", "1.5", *cli_args]) == 2


def test_missing_layout_exits_with_data_error(tmp_path, cli_args):
    missing = tmp_path / "no_layout.csv"
    assert main(["adjacency", "--method", "geodesic", "--layout", str(missing), *cli_args]) == 3


def test_subject_without_recordings_exits_with_data_error(tmp_path, cli_args):
    assert main(["adjacency", "--method", "pcc", "--subject", "S7", "--data-dir", str(tmp_path), *cli_args]) == 3


# --- configuration ---
def test_config_file_is_overridden_by_flags(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"method": "geodesic", "seed": 4, "prune": {"epochs_per_round": 2}}),
                      encoding="utf-8")
    parser = build_parser()

    cfg = deps.run_config_from_args(parser.parse_args(["train", "--config", str(config)]))
    assert cfg.method == "geodesic"
    assert cfg.prune.epochs_per_round == 2
    assert cfg.prune.seed == 4

    cfg = deps.run_config_from_args(parser.parse_args(["train", "--config", str(config), "--epochs", "5",
                                                        "--seed", "9"]))
    assert cfg.prune.epochs_per_round == 5
    assert cfg.seed == cfg.prune.seed == 9


def test_invalid_config_file(tmp_path):
    config = tmp_path / "broken.json"
    config.write_text("{not json", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        deps.run_config_from_args(build_parser().parse_args(["train", "--config", str(config)]))


def test_expand_runs_crosses_subjects_and_models():
    args = build_parser().parse_args(["train", "--subject", "S1", "S2", "--model", "C", "D"])
    configs = deps.expand_runs(args)
    assert [(c.subject, c.model.name) for c in configs] == [("S1", "C"), ("S1", "D"), ("S2", "C"), ("S2", "D")]


def test_desk_scale_narrows_a_full_montage_model(tmp_path):
    data = tmp_path / "data"
    write_surrogate_subject(data, 1, runs=(4,), n_trials=6, seed=1)
    args = build_parser().parse_args(["train", "--desk-scale", "--subject", "S1", "--data-dir", str(data),
                                      "--runs", "4", "--output-dir", str(tmp_path / "out")])
    dataset, spec = deps.load_run_dataset(deps.expand_runs(args)[0])
    assert dataset.n_nodes == spec.n_nodes == 64
    assert spec.conv_filters == [16, 16, 16, 16, 16]
    assert spec.conv_orders == MODEL_SETTINGS["D"].conv_orders


# --- adjacency ---
def test_geodesic_adjacency_is_identical_across_subjects(tmp_path, cli_args):
    assert main(["adjacency", "--method", "geodesic", "--subject", "S1", "S2", *cli_args]) == 0
    first = crud_adjacency.load_adjacency(run_dir(tmp_path, "S001", "D", "geodesic") / "adjacency.csv")
    second = crud_adjacency.load_adjacency(run_dir(tmp_path, "S002", "D", "geodesic") / "adjacency.csv")
    assert first.shape == (64, 64)
    np.testing.assert_array_equal(first, second)


def test_pcc_adjacency_differs_across_subjects(tmp_path, cli_args):
    data = tmp_path / "data"
    write_surrogate_subject(data, 1, runs=(4, 6), n_channels=8, n_trials=6, seed=1)
    write_surrogate_subject(data, 2, runs=(4, 6), n_channels=8, n_trials=6, seed=2)
    assert main(["adjacency", "--method", "pcc", "--subject", "S1", "S2", "--data-dir", str(data),
                 "--runs", "4", "6", *cli_args]) == 0

    first = crud_adjacency.load_adjacency(run_dir(tmp_path, "S001", "D", "pcc") / "adjacency.csv")
    second = crud_adjacency.load_adjacency(run_dir(tmp_path, "S002", "D", "pcc") / "adjacency.csv")
    assert first.shape == (8, 8)
    np.testing.assert_allclose(first, first.T)
    assert np.all(np.diag(first) == 0)
    assert not np.allclose(first, second)
    assert (tmp_path / "out" / "S001" / "dataset_seed0.npz").exists()


def test_dataset_cache_is_rebuilt_when_settings_change(tmp_path, cli_args):
    data = tmp_path / "data"
    write_surrogate_subject(data, 1, runs=(4, 6), n_channels=8, n_trials=6, seed=1)
    cache = tmp_path / "out" / "S001" / "dataset_seed0.npz"
    base = ["adjacency", "--method", "pcc", "--subject", "S1", "--data-dir", str(data)]

    assert main([*base, "--runs", "4", "6", *cli_args]) == 0
    assert crud_dataset.cached_source(cache)["runs"] == [4, 6]
    assert len(crud_dataset.load_dataset(cache).trials) == 12

    assert main([*base, "--runs", "4", "--notch-hz", "60", *cli_args]) == 0
    source = crud_dataset.cached_source(cache)
    assert source["runs"] == [4]
    assert source["notch_hz"] == 60.0
    assert len(crud_dataset.load_dataset(cache).trials) == 6

    fresh = tmp_path / "fresh"
    assert main([*base, "--runs", "4", "--notch-hz", "60", "--output-dir", str(fresh), "--log-file", ""]) == 0
    np.testing.assert_allclose(
        crud_adjacency.load_adjacency(run_dir(tmp_path, "S001", "D", "pcc") / "adjacency.csv"),
        crud_adjacency.load_adjacency(fresh / "S001" / "D" / "pcc" / "adjacency.csv"),
    )


def test_csv_trials_subject_builds_a_pcc_adjacency(tmp_path, cli_args, csv_subject_factory):
    data = tmp_path / "data"
    csv_subject_factory(data / "S005", runs=(4, 6, 8), per_class=3)
    assert main(["adjacency", "--method", "pcc", "--subject", "S5", "--data-dir", str(data),
                 "--runs", "4", "6", *cli_args]) == 0

    adjacency = crud_adjacency.load_adjacency(run_dir(tmp_path, "S005", "D", "pcc") / "adjacency.csv")
    assert adjacency.shape == (8, 8)
    np.testing.assert_allclose(adjacency, adjacency.T)
    cache = tmp_path / "out" / "S005" / "dataset_seed0.npz"
    assert crud_dataset.cached_source(cache)["format"] == "csv"
    assert {t.run for t in crud_dataset.load_dataset(cache).trials} == {4, 6}


def test_malformed_csv_trial_exits_with_data_error(tmp_path, cli_args):
    folder = tmp_path / "data" / "S007"
    folder.mkdir(parents=True)
    (folder / "trial00.csv").write_text("a,b\nc,d\n", encoding="utf-8")
    (folder / "labels.csv").write_text("file,run,label\ntrial00.csv,4,left_fist\n", encoding="utf-8")
    assert main(["adjacency", "--method", "pcc", "--subject", "S7", "--data-dir", str(tmp_path / "data"),
                 "--runs", "4", *cli_args]) == 3


# --- train / glt / evaluate on the planted task ---
def test_desk_scale_glt_writes_the_ladder(tmp_path, cli_args):
    assert main(["glt", "--desk-scale", "--epochs", "4", *cli_args]) == 0
    out = run_dir(tmp_path, "planted", "D", "eeg_glt")
    manifest = crud_tickets.load_manifest(out / "tickets")
    assert manifest.ladder == [d for _, _, d in density_schedule(56)]
    assert len(manifest.rounds) == 16
    assert all((out / "tickets" / r.mask_file).exists() for r in manifest.rounds)
    assert len(crud_runlog.load_runlog(out / "runlog.jsonl")) == 16 * 4

    support = crud_adjacency.load_adjacency(out / "adjacency.csv")
    assert int(support.sum()) == manifest.rounds[manifest.selected_round].remaining_edges

    # a ticket trains like any fixed adjacency afterwards
    assert main(["train", "--desk-scale", "--method", "eeg_glt", "--epochs", "2", *cli_args]) == 0
    np.testing.assert_array_equal(crud_adjacency.load_adjacency(out / "adjacency.csv"), support)


def test_desk_scale_train_is_reproducible(tmp_path):
    outputs = []
    for name in ("first", "second"):
        root = tmp_path / name
        assert main(["train", "--desk-scale", "--method", "pcc", "--epochs", "3",
                     "--output-dir", str(root), "--log-file", ""]) == 0
        outputs.append(root / "planted" / "D" / "pcc")

    rows = crud_runlog.load_metrics(outputs[0] / "metrics.csv")
    assert [r["split"] for r in rows] == ["train_final", "train", "val", "test"]
    assert (outputs[0] / "metrics.csv").read_text() == (outputs[1] / "metrics.csv").read_text()
    assert (outputs[0] / "best.npz").exists() and (outputs[0] / "final.npz").exists()
    assert len(crud_runlog.load_runlog(outputs[0] / "runlog.jsonl")) == 3


def test_evaluate_reproduces_the_best_checkpoint(tmp_path, cli_args):
    assert main(["train", "--desk-scale", "--method", "geodesic", "--epochs", "3", *cli_args]) == 0
    assert main(["evaluate", "--desk-scale", "--method", "geodesic", "--split", "val", *cli_args]) == 0
    out = run_dir(tmp_path, "planted", "D", "geodesic")
    trained = {r["split"]: r for r in crud_runlog.load_metrics(out / "metrics.csv")}
    evaluated = crud_runlog.load_metrics(out / "evaluate_val.csv")
    assert evaluated[0]["accuracy"] == trained["val"]["accuracy"]
    assert evaluated[0]["macro_f1"] == trained["val"]["macro_f1"]


def test_evaluate_without_checkpoint_exits_with_data_error(cli_args):
    assert main(["evaluate", "--desk-scale", "--method", "pcc", *cli_args]) == 3
