from typing import Optional
from pydantic import BaseModel, Field


class AdamConfig(BaseModel):
    learning_rate: float = Field(0.01, gt=0, description="Initial learning rate (eta).")
    beta1: float = Field(0.9, gt=0, lt=1, description="Decay rate of the first-moment estimate.")
    beta2: float = Field(0.999, gt=0, lt=1, description="Decay rate of the second-moment estimate.")
    epsilon: float = Field(1e-8, gt=0, description="Denominator guard.")


class EpochLogRecord(BaseModel):
    round: Optional[int] = Field(None, description="Pruning round; None for fixed-adjacency training.")
    epoch: int = Field(..., description="Epoch index within the round (0-based).")
    train_loss: float = Field(..., description="Mean mini-batch cross-entropy over the epoch.")
    val_acc: float = Field(..., description="Validation accuracy after the epoch.")
    density: Optional[float] = Field(None, description="Mask density during the epoch.")
