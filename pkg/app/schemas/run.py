from typing import List, Literal, Optional, Union
from pydantic import BaseModel, Field

from app.schemas.model import ModelSpec
from app.schemas.pruning import PruneConfig

AdjacencyMethod = Literal["geodesic", "pcc", "eeg_glt"]


class RunConfig(BaseModel):
    subject: Optional[str] = Field(None, description="Subject identifier, e.g. 'S6' or '6'.")
    model: Union[str, ModelSpec] = Field("D", description="Model letter A-F or an explicit spec.")
    method: AdjacencyMethod = Field("pcc", description="Adjacency construction method.")
    prune: PruneConfig = Field(default_factory=PruneConfig)
    data_dir: Optional[str] = Field(None, description="EDF root; defaults to settings.EEG_GLT_DATA_DIR.")
    output_dir: Optional[str] = Field(None, description="Output root; defaults to settings.EEG_GLT_OUTPUT_DIR.")
    layout_path: Optional[str] = Field(None, description="Electrode layout CSV.")
    seed: int = Field(0, description="Seed for the whole run.")
    desk_scale: bool = Field(False, description="Shrink N_ep/B/N for CI on the planted task.")
    runs: List[int] = Field(default_factory=lambda: [4, 6, 8, 10, 12, 14], description="Imagery runs to load.")
    split_ratios: List[float] = Field(default_factory=lambda: [0.70, 0.15, 0.15], description="Train/val/test trial ratios.")
    notch_hz: float = Field(50.0, description="Notch centre frequency.")
    jobs: int = Field(1, description="Parallel (subject, model) runs.")
