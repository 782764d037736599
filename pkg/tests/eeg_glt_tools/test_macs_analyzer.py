import pytest

from app.core.exceptions import InvalidDensity, InvalidSpec
from app.schemas.model import PUBLISHED_DENSE_MACS, resolve_model
from eeg_glt_tools.macs_analyzer import (
    DEVIATION_WARN_PCT,
    MacsConvention,
    count_layer_macs,
    count_model_macs,
    edges_at_density,
    header_line,
    macs_row,
    rows_to_csv,
    savings_report,
)


def test_model_d_last_conv_layer_by_hand():
    layer = count_model_macs(resolve_model("D")).per_layer[4]
    assert layer.graph_part_macs == 516_096  # (K-1) * 4032 * 128
    assert layer.projection_macs == 4_194_304  # 64 * 2 * 128 * 256
    assert layer.bias_bn_macs == 2 * 64 * 256


def test_k_products_convention_counts_k_products():
    k_minus_one = count_layer_macs(128, 256, 2, 64, 4032)
    k_products = count_layer_macs(128, 256, 2, 64, 4032, MacsConvention.K_PRODUCTS)
    assert k_products.graph_part_macs == 2 * k_minus_one.graph_part_macs
    assert k_products.projection_macs == k_minus_one.projection_macs


def test_graph_macs_are_linear_in_density():
    spec = resolve_model("C")
    dense = count_model_macs(spec, 1.0)
    half = count_model_macs(spec, 0.5)
    assert half.graph_macs * 2 == dense.graph_macs
    assert half.proj_macs == dense.proj_macs
    assert half.fc_macs == dense.fc_macs


@pytest.mark.parametrize("higher,lower", [("A", "B"), ("C", "D"), ("E", "F")])
def test_order_five_costs_more_than_order_two(higher, lower):
    assert count_model_macs(resolve_model(higher)).total > count_model_macs(resolve_model(lower)).total


def test_fc_macs_of_model_a():
    fc = count_model_macs(resolve_model("A")).fc_macs
    assert fc == (512 * 1024 + 1024) + (1024 * 2048 + 2048) + (2048 * 4 + 4)


def test_savings_from_published_totals():
    assert round(savings_report(291.62e6, 8.76e6), 2) == 97.00
    assert round(savings_report(81.89e6, 80.67e6), 2) == 1.49


def test_savings_between_models_and_densities():
    spec = resolve_model("D")
    assert savings_report(spec, spec) == 0.0
    assert savings_report(spec, (spec, 0.5)) > 0.0
    with pytest.raises(InvalidSpec):
        savings_report(0, 1)


def test_density_is_validated():
    with pytest.raises(InvalidDensity):
        edges_at_density(64, 0.0)
    with pytest.raises(InvalidDensity):
        count_model_macs(resolve_model("D"), 1.5)
    assert edges_at_density(64, 1.0) == 4032


def test_layer_sizes_are_validated():
    with pytest.raises(InvalidSpec):
        count_layer_macs(0, 16, 2, 64, 10)


def test_macs_row_reports_deviation_only_when_dense():
    row = macs_row(resolve_model("D"), 1.0)
    assert row.reference_total == PUBLISHED_DENSE_MACS["D"]
    assert row.deviation_pct == pytest.approx(100 * (row.total - row.reference_total) / row.reference_total)
    sparse = macs_row(resolve_model("D"), 0.5)
    assert sparse.reference_total is None and sparse.deviation_pct is None


def test_rows_to_csv_layout():
    row = macs_row(resolve_model("F"), 1.0)
    text = rows_to_csv([row], MacsConvention.K_MINUS_ONE)
    lines = text.splitlines()
    assert lines[0] == f"# convention=k_minus_one calibration=uncalibrated worst_deviation_pct={row.deviation_pct:.2f}"
    assert lines[1].split(",")[:3] == ["model", "density", "graph_macs"]
    assert lines[2].startswith("F,1.0,")


def test_header_states_the_worst_deviation():
    rows = [macs_row(resolve_model(letter), 1.0) for letter in ("C", "D")]
    worst = max((r.deviation_pct for r in rows), key=abs)
    assert header_line(rows, MacsConvention.K_MINUS_ONE).endswith(f" worst_deviation_pct={worst:.2f}")
    assert abs(macs_row(resolve_model("D"), 1.0).deviation_pct) > DEVIATION_WARN_PCT

    sparse = [macs_row(resolve_model("D"), 0.5)]
    assert header_line(sparse, MacsConvention.K_PRODUCTS) == "# convention=k_products calibration=uncalibrated"
