from .metrics import MacsRow, MetricsReport
from .model import MODEL_SETTINGS, PUBLISHED_DENSE_MACS, ModelSpec, resolve_model
from .pruning import PruneConfig, TicketManifest, TicketRecord, TicketSummary
from .run import RunConfig
from .training import AdamConfig, EpochLogRecord

__all__ = [
    # Model
    "ModelSpec", "MODEL_SETTINGS", "PUBLISHED_DENSE_MACS", "resolve_model",
    # Training and pruning
    "AdamConfig", "EpochLogRecord", "PruneConfig", "TicketRecord", "TicketSummary", "TicketManifest",
    # Runs and reports
    "RunConfig", "MetricsReport", "MacsRow",
]
