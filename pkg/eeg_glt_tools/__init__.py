from . import graph_core
from . import autodiff
from . import metrics
from . import chebnet
from . import edf_reader
from . import preprocessing
from . import glt_pruner
from . import macs_analyzer
from . import synthetic

from .chebnet import build_model, forward, predict
from .glt_pruner import MaskState, density_schedule, find_ticket, prune_mask, rewind_weights, train_round
from .macs_analyzer import MacsConvention, count_model_macs, savings_report

__all__ = [
    "graph_core", "autodiff", "metrics", "chebnet", "edf_reader", "preprocessing",
    "glt_pruner", "macs_analyzer", "synthetic",
    "build_model", "forward", "predict",
    "MaskState", "density_schedule", "find_ticket", "prune_mask", "rewind_weights", "train_round",
    "MacsConvention", "count_model_macs", "savings_report",
]
