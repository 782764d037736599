from typing import List, Optional
from pydantic import BaseModel, Field


class MetricsReport(BaseModel):
    accuracy: float = Field(..., description="Correct predictions / all predictions.")
    macro_sensitivity: float = Field(..., description="Recall averaged over classes.")
    macro_precision: float = Field(..., description="Precision averaged over classes.")
    macro_f1: float = Field(..., description="Per-class F1 averaged over classes.")
    confusion: List[List[int]] = Field(..., description="Confusion matrix, rows = true class.")
    n_samples: int = Field(..., description="Number of evaluated samples.")


class MacsRow(BaseModel):
    model: str
    density: float
    graph_macs: int
    proj_macs: int
    bias_bn_macs: int
    fc_macs: int
    total: int
    reference_total: Optional[float] = Field(None, description="Published dense total, when known.")
    deviation_pct: Optional[float] = Field(None, description="100 * (total - reference) / reference.")
