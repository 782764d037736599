# eeg_glt_tools/macs_analyzer.py
"""
Multiply-accumulate counts of one single-time-point inference.

Per graph-convolution layer (F_in -> F_out, order K, N nodes, nnz adjacency entries):
    graph part  = (K - 1) * nnz * F_in      one sparse product per recurrence step
    projection  = N * K * F_in * F_out
    bias / BN   = 2 * N * F_out
Fully connected layers count D_in * D_out + D_out. Mean pooling is additions only.
``MacsConvention.K_PRODUCTS`` counts K sparse products instead of K - 1.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Union

from app.core.exceptions import InvalidDensity, InvalidSpec
from app.schemas.metrics import MacsRow
from app.schemas.model import PUBLISHED_DENSE_MACS, ModelSpec

logger = logging.getLogger(__name__)

# Deviation from a published total beyond which the counter logs a warning.
DEVIATION_WARN_PCT = 35.0


class MacsConvention(str, Enum):
    K_MINUS_ONE = "k_minus_one"
    K_PRODUCTS = "k_products"


@dataclass(frozen=True)
class LayerMacs:
    layer_name: str
    graph_part_macs: int
    projection_macs: int
    bias_bn_macs: int

    @property
    def total(self) -> int:
        return self.graph_part_macs + self.projection_macs + self.bias_bn_macs


@dataclass
class MacsBreakdown:
    per_layer: List[LayerMacs] = field(default_factory=list)
    fc_macs: int = 0

    @property
    def graph_macs(self) -> int:
        return sum(layer.graph_part_macs for layer in self.per_layer)

    @property
    def proj_macs(self) -> int:
        return sum(layer.projection_macs for layer in self.per_layer)

    @property
    def bias_bn_macs(self) -> int:
        return sum(layer.bias_bn_macs for layer in self.per_layer)

    @property
    def total(self) -> int:
        return self.graph_macs + self.proj_macs + self.bias_bn_macs + self.fc_macs


def count_layer_macs(
        f_in: int,
        f_out: int,
        K: int,
        n_nodes: int,
        nnz: int,
        convention: MacsConvention = MacsConvention.K_MINUS_ONE,
        layer_name: str = "conv",
) -> LayerMacs:
    if min(f_in, f_out, K, n_nodes) < 1 or nnz < 0:
        raise InvalidSpec(f"Layer {layer_name}: sizes must be positive (F_in={f_in}, F_out={f_out}, K={K}, N={n_nodes}, nnz={nnz}).")
    products = K - 1 if convention == MacsConvention.K_MINUS_ONE else K
    return LayerMacs(
        layer_name=layer_name,
        graph_part_macs=products * nnz * f_in,
        projection_macs=n_nodes * K * f_in * f_out,
        bias_bn_macs=2 * n_nodes * f_out,
    )


def edges_at_density(n_nodes: int, density: float) -> int:
    if not 0 < density <= 1:
        raise InvalidDensity(f"Density must lie in (0, 1], got {density}.")
    return int(round(density * (n_nodes * n_nodes - n_nodes)))


def count_model_macs(
        spec: ModelSpec,
        density: float = 1.0,
        convention: MacsConvention = MacsConvention.K_MINUS_ONE,
) -> MacsBreakdown:
    spec = spec.check()
    nnz = edges_at_density(spec.n_nodes, density)
    breakdown = MacsBreakdown()
    f_in = 1
    for i, (f_out, k) in enumerate(zip(spec.conv_filters, spec.conv_orders), start=1):
        breakdown.per_layer.append(count_layer_macs(f_in, f_out, k, spec.n_nodes, nnz, convention, f"conv{i}"))
        f_in = f_out
    d_in = f_in
    for d_out in spec.fc_nodes:
        breakdown.fc_macs += d_in * d_out + d_out
        d_in = d_out
    return breakdown


def _total(item: Union[float, int, ModelSpec, tuple], convention: MacsConvention) -> float:
    """A published total, a ModelSpec (dense) or a (ModelSpec, density) pair -> MACs."""
    if isinstance(item, tuple):
        spec, density = item
        return float(count_model_macs(spec, density, convention).total)
    if isinstance(item, ModelSpec):
        return float(count_model_macs(item, 1.0, convention).total)
    return float(item)


def savings_report(
        baseline: Union[float, int, ModelSpec, tuple],
        ticket: Union[float, int, ModelSpec, tuple],
        convention: MacsConvention = MacsConvention.K_MINUS_ONE,
) -> float:
    """Percent saving 100 * (1 - MACs(ticket) / MACs(baseline))."""
    base = _total(baseline, convention)
    if base <= 0:
        raise InvalidSpec(f"Baseline MACs must be positive, got {base}.")
    return 100.0 * (1.0 - _total(ticket, convention) / base)


def macs_row(
        spec: ModelSpec,
        density: float = 1.0,
        convention: MacsConvention = MacsConvention.K_MINUS_ONE,
) -> MacsRow:
    breakdown = count_model_macs(spec, density, convention)
    reference = PUBLISHED_DENSE_MACS.get(spec.name or "") if density == 1.0 and spec.n_nodes == 64 else None
    deviation = None
    if reference:
        deviation = 100.0 * (breakdown.total - reference) / reference
        level = logging.WARNING if abs(deviation) > DEVIATION_WARN_PCT else logging.INFO
        logger.log(level, "Model %s: %d MACs vs published %.0f (%+.2f%%).",
                   spec.name, breakdown.total, reference, deviation)
    return MacsRow(
        model=spec.name or "custom",
        density=density,
        graph_macs=breakdown.graph_macs,
        proj_macs=breakdown.proj_macs,
        bias_bn_macs=breakdown.bias_bn_macs,
        fc_macs=breakdown.fc_macs,
        total=breakdown.total,
        reference_total=reference,
        deviation_pct=deviation,
    )


def header_line(rows: List[MacsRow], convention: MacsConvention) -> str:
    """
    ``# convention=<name> calibration=uncalibrated[ worst_deviation_pct=<x>]``. Counts are
    analytic and never scaled to the published totals; the worst deviation from them is
    stated whenever a row has a reference.
    """
    header = f"# convention={convention.value} calibration=uncalibrated"
    deviations = [row.deviation_pct for row in rows if row.deviation_pct is not None]
    if deviations:
        header += f" worst_deviation_pct={max(deviations, key=abs):.2f}"
    return header


def rows_to_csv(rows: Iterable[MacsRow], convention: Optional[MacsConvention] = None) -> str:
    """CSV with a leading ``header_line`` comment; '.' decimals, LF endings."""
    rows = list(rows)
    buffer = io.StringIO()
    if convention is not None:
        buffer.write(header_line(rows, convention) + "\n")
    columns = list(MacsRow.model_fields)
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = row.model_dump()
        writer.writerow(["" if values[c] is None else values[c] for c in columns])
    return buffer.getvalue()
