from typing import Dict, List, Optional
from pydantic import BaseModel, Field

from app.core.exceptions import InvalidSpec


class ModelSpec(BaseModel):
    name: Optional[str] = Field(None, description="Model letter (A-F) or a free-form label.")
    conv_filters: List[int] = Field(..., description="Filters F_i of each graph-convolution layer.")
    conv_orders: List[int] = Field(..., description="Chebyshev order K_i of each graph-convolution layer.")
    fc_nodes: List[int] = Field(..., description="Widths H_i of the fully connected stack, ending at O.")
    n_nodes: int = Field(64, description="Number of graph nodes (EEG channels).")
    n_classes: int = Field(4, description="Number of output classes O.")
    has_bn_fc: bool = Field(True, description="Batch normalisation after each hidden FC layer.")
    per_node_bias: bool = Field(True, description="Conv bias shaped N x F_out (False: F_out only).")
    dropout_rate: float = Field(0.5, description="Dropout after each hidden FC ReLU.")

    def check(self) -> "ModelSpec":
        """Raises InvalidSpec if the layer plan is inconsistent."""
        if not self.conv_filters:
            raise InvalidSpec("A model needs at least one graph-convolution layer.")
        if len(self.conv_filters) != len(self.conv_orders):
            raise InvalidSpec(
                f"conv_filters has {len(self.conv_filters)} entries but conv_orders has {len(self.conv_orders)}."
            )
        if not self.fc_nodes or self.fc_nodes[-1] != self.n_classes:
            raise InvalidSpec(f"The last FC width must equal n_classes={self.n_classes}, got {self.fc_nodes}.")
        counts = self.conv_filters + self.conv_orders + self.fc_nodes + [self.n_nodes, self.n_classes]
        if any(c <= 0 for c in counts):
            raise InvalidSpec("All filter counts, orders, widths and sizes must be positive.")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidSpec(f"Dropout rate must lie in [0, 1), got {self.dropout_rate}.")
        return self

    def shrunk(self, n_nodes: int, conv_filters: Optional[List[int]] = None,
               fc_hidden: Optional[List[int]] = None) -> "ModelSpec":
        """Same layer plan on a smaller graph, optionally with narrower layers."""
        fc_nodes = (fc_hidden + [self.n_classes]) if fc_hidden is not None else list(self.fc_nodes)
        return self.model_copy(update={
            "n_nodes": n_nodes,
            "conv_filters": conv_filters if conv_filters is not None else list(self.conv_filters),
            "fc_nodes": fc_nodes,
        })


def _spec(name, filters, orders, fc, has_bn_fc) -> ModelSpec:
    return ModelSpec(name=name, conv_filters=filters, conv_orders=orders, fc_nodes=fc, has_bn_fc=has_bn_fc)


# Model settings A-F
MODEL_SETTINGS: Dict[str, ModelSpec] = {
    "A": _spec("A", [16, 32, 64, 128, 256, 512], [5] * 6, [1024, 2048, 4], True),
    "B": _spec("B", [16, 32, 64, 128, 256, 512], [2] * 6, [1024, 2048, 4], True),
    "C": _spec("C", [16, 32, 64, 128, 256], [5] * 5, [4], False),
    "D": _spec("D", [16, 32, 64, 128, 256], [2] * 5, [4], False),
    "E": _spec("E", [64, 128, 256, 512, 1024], [5] * 5, [512, 128, 4], True),
    "F": _spec("F", [64, 128, 256, 512, 1024], [2] * 5, [512, 128, 4], True),
}

# Published single-time-point MACs at 100% density, for side-by-side reporting.
PUBLISHED_DENSE_MACS: Dict[str, float] = {
    "A": 81.89e6, "B": 42.26e6, "C": 22.64e6, "D": 11.32e6, "E": 291.62e6, "F": 146.10e6,
}


def resolve_model(model: "str | dict | ModelSpec") -> ModelSpec:
    """Model letter, dict or ModelSpec -> validated ModelSpec copy."""
    if isinstance(model, ModelSpec):
        return model.model_copy(deep=True).check()
    if isinstance(model, dict):
        if "model" in model and len(model) == 1:
            return resolve_model(model["model"])
        return ModelSpec(**model).check()
    key = str(model).strip().upper()
    if key not in MODEL_SETTINGS:
        raise InvalidSpec(f"Unknown model '{model}'. Expected one of {sorted(MODEL_SETTINGS)}.")
    return MODEL_SETTINGS[key].model_copy(deep=True)
