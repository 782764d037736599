from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.exceptions import InvalidConfig
from app.schemas.metrics import MetricsReport


class PruneConfig(BaseModel):
    prune_rate: float = Field(0.10, description="Fraction p_g of remaining edges pruned per round.")
    density_floor: float = Field(0.1339, description="Lowest graph density s_g; the loop stops below it.")
    epochs_per_round: int = Field(1000, description="Training epochs N_ep per round.")
    learning_rate: float = Field(0.01, description="Adam learning rate (eta).")
    batch_size: int = Field(1024, description="Mini-batch size B.")
    seed: int = Field(0, description="Seed for init, dropout and shuffling.")
    lambda_max_mode: str = Field("fixed_2", description="'fixed_2' or 'power_iteration'.")
    train_mask: bool = Field(True, description="Update unpruned mask entries alongside the weights.")

    def check(self) -> "PruneConfig":
        if not 0 < self.prune_rate < 1:
            raise InvalidConfig(f"prune_rate must lie in (0, 1), got {self.prune_rate}.")
        if not 0 < self.density_floor < 1:
            raise InvalidConfig(f"density_floor must lie in (0, 1), got {self.density_floor}.")
        if self.epochs_per_round < 1:
            raise InvalidConfig(f"epochs_per_round must be >= 1, got {self.epochs_per_round}.")
        if self.batch_size < 2:
            raise InvalidConfig(f"batch_size must be >= 2 for batch normalisation, got {self.batch_size}.")
        if self.learning_rate <= 0:
            raise InvalidConfig(f"learning_rate must be positive, got {self.learning_rate}.")
        if self.lambda_max_mode not in ("fixed_2", "power_iteration"):
            raise InvalidConfig(f"Unknown lambda_max_mode '{self.lambda_max_mode}'.")
        return self

    @classmethod
    def desk_scale(cls, **overrides) -> "PruneConfig":
        """CI profile: the whole loop on an 8-node graph in minutes."""
        values = {"epochs_per_round": 30, "batch_size": 64}
        values.update(overrides)
        return cls(**values)


class TicketRecord(BaseModel):
    round: int = Field(..., description="Pruning round s (0 = dense).")
    density: float = Field(..., description="Fraction of surviving off-diagonal mask entries.")
    remaining_edges: int = Field(..., description="Supported edges during the round.")
    best_val_accuracy: float = Field(..., description="Best validation accuracy over the round.")
    best_epoch: int = Field(..., description="Epoch at which the best validation accuracy occurred.")
    mask_snapshot: np.ndarray = Field(..., exclude=True, description="Real-valued m_g at the best epoch.")
    support: np.ndarray = Field(..., exclude=True, description="Binary support during the round.")
    test_metrics: Optional[MetricsReport] = Field(None, description="Test-split metrics at the best epoch.")
    best_params: Optional[Dict[str, np.ndarray]] = Field(None, exclude=True, description="Parameters at the best epoch, when kept.")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def same_as(self, other: "TicketRecord") -> bool:
        return (
            self.model_dump() == other.model_dump()
            and np.array_equal(self.mask_snapshot, other.mask_snapshot)
            and np.array_equal(self.support, other.support)
        )


class TicketSummary(BaseModel):
    round: int
    density: float
    remaining_edges: int
    best_val_accuracy: float
    best_epoch: int
    test_accuracy: Optional[float] = None
    mask_file: str = Field(..., description="Binary support CSV inside the tickets directory.")


class TicketManifest(BaseModel):
    subject: Optional[str] = Field(None, description="Subject identifier (e.g. 'S6').")
    model: str = Field(..., description="Model letter or label.")
    seed: int = Field(..., description="Seed of the run.")
    prune_rate: float
    density_floor: float
    ladder: List[float] = Field(..., description="Density of every round, from the density schedule.")
    rounds: List[TicketSummary] = Field(default_factory=list)
    selected_round: int = Field(..., description="Round of the selected EEG_GLT ticket.")
    selected_density: float
    selected_val_accuracy: float
