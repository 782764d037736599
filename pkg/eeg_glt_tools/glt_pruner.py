# eeg_glt_tools/glt_pruner.py
"""
Graph lottery ticket search over the adjacency mask.

Each round trains the weights and the unpruned mask entries, records the mask at the
best validation epoch, prunes the ceil(p_g * remaining) smallest-magnitude supported
entries, binarizes the survivors to 1 and rewinds the weights to their initial values.
The loop runs while density >= s_g.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.core.exceptions import (
    EmptyMask,
    InvalidConfig,
    MissingSnapshot,
    NonFiniteLoss,
    ShapeMismatch,
)
from app.schemas.pruning import PruneConfig, TicketRecord
from app.schemas.training import AdamConfig, EpochLogRecord
from eeg_glt_tools import chebnet
from eeg_glt_tools.chebnet import MASK_KEY, NetworkInstance
from eeg_glt_tools.graph_core import complete_graph
from eeg_glt_tools.preprocessing import TimepointDataset

logger = logging.getLogger(__name__)

# Accuracies closer than 0.1 percentage point count as tied during selection.
SELECTION_TOLERANCE = 0.001

EpochCallback = Callable[[EpochLogRecord], None]


@dataclass
class MaskState:
    values: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.support.shape or self.values.ndim != 2:
            raise ShapeMismatch(f"Mask values {self.values.shape} and support {self.support.shape} differ.")

    @classmethod
    def dense(cls, n_nodes: int) -> "MaskState":
        original = complete_graph(n_nodes).adjacency
        return cls(values=original.copy(), support=original.copy())

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def n_edges(self) -> int:
        return self.n_nodes * self.n_nodes - self.n_nodes

    @property
    def remaining_edges(self) -> int:
        return int(np.count_nonzero(self.support))

    @property
    def density(self) -> float:
        return self.remaining_edges / self.n_edges


@dataclass
class TicketSearch:
    records: List[TicketRecord] = field(default_factory=list)
    selected: Optional[TicketRecord] = None

    @property
    def ladder(self) -> List[float]:
        return [r.density for r in self.records]


def density_schedule(n_edges: int = 4032, p_g: float = 0.10, s_g: float = 0.1339) -> List[Tuple[int, int, float]]:
    """(round, remaining_edges, density) for round 0 (dense) down to the last round >= s_g."""
    if n_edges < 1:
        raise InvalidConfig(f"n_edges must be >= 1, got {n_edges}.")
    if not 0 < p_g < 1 or not 0 < s_g < 1:
        raise InvalidConfig(f"Need 0 < p_g < 1 and 0 < s_g < 1, got p_g={p_g}, s_g={s_g}.")
    ladder = [(0, n_edges, 1.0)]
    remaining = n_edges
    while True:
        remaining -= math.ceil(p_g * remaining)
        density = remaining / n_edges
        if remaining < 1 or density < s_g:
            return ladder
        ladder.append((len(ladder), remaining, density))


def _adam_config(cfg: PruneConfig) -> AdamConfig:
    return AdamConfig(learning_rate=cfg.learning_rate)


def _load_mask(net: NetworkInstance, mask: MaskState):
    if mask.n_nodes != net.spec.n_nodes:
        raise ShapeMismatch(f"Mask is {mask.n_nodes} x {mask.n_nodes}, model has {net.spec.n_nodes} nodes.")
    net.params.theta[MASK_KEY].data = (mask.values * mask.support).astype(np.float64)
    net.support = mask.support.astype(np.float64).copy()


def train_round(
        net: NetworkInstance,
        mask: Optional[MaskState],
        data: TimepointDataset,
        cfg: PruneConfig,
        round_index: int = 0,
        on_epoch: Optional[EpochCallback] = None,
        keep_best_params: bool = False,
) -> TicketRecord:
    """
    Trains for ``cfg.epochs_per_round`` epochs and returns the record of the best
    validation epoch (earliest on ties). With ``mask=None`` the net trains on its fixed
    adjacency and the record carries that adjacency's support.
    """
    cfg.check()
    if mask is not None:
        if not net.has_mask:
            raise InvalidConfig("A mask was given but the model was built without a trainable mask.")
        _load_mask(net, mask)

    X_train, y_train = data.subset("train")
    X_val, y_val = data.subset("val")
    X_test, y_test = data.subset("test")
    adam = _adam_config(cfg)
    shuffle_rng = np.random.default_rng([cfg.seed, round_index])
    frozen = [MASK_KEY] if net.has_mask and not cfg.train_mask else None

    if mask is not None:
        support, density, remaining = mask.support.copy(), mask.density, mask.remaining_edges
    else:
        support = (net.adjacency != 0).astype(np.float64)
        remaining = int(support.sum())
        density = remaining / (net.spec.n_nodes ** 2 - net.spec.n_nodes)

    best_acc, best_epoch = -1.0, -1
    best_mask = None
    best_params = None
    test_metrics = None
    for epoch in range(cfg.epochs_per_round):
        try:
            loss = chebnet.train_epoch(net, X_train, y_train, cfg.batch_size, adam, shuffle_rng, frozen)
        except NonFiniteLoss as exc:
            raise NonFiniteLoss(
                f"Round {round_index}, epoch {epoch}, density {density:.4f}: {exc}"
            ) from exc
        val_acc = chebnet.accuracy(net, X_val, y_val)
        if on_epoch is not None:
            on_epoch(EpochLogRecord(round=round_index if mask is not None else None, epoch=epoch,
                                    train_loss=loss, val_acc=val_acc, density=density))
        if val_acc > best_acc:
            best_acc, best_epoch = val_acc, epoch
            best_mask = (net.params.theta[MASK_KEY].data.copy() if net.has_mask else net.adjacency.copy())
            if len(y_test):
                test_metrics = chebnet.predict_metrics(net, X_test, y_test)
            if keep_best_params:
                best_params = chebnet.state_arrays(net)

    logger.info("Round %d (density %.2f%%): best val acc %.4f at epoch %d.",
                round_index, 100 * density, best_acc, best_epoch)
    return TicketRecord(
        round=round_index,
        density=density,
        remaining_edges=remaining,
        best_val_accuracy=best_acc,
        best_epoch=best_epoch,
        mask_snapshot=best_mask,
        support=support,
        test_metrics=test_metrics,
        best_params=best_params,
    )


def prune_mask(record: TicketRecord, p_g: float) -> MaskState:
    """
    Zeroes the ceil(p_g * remaining) supported entries of smallest |value| (row-major
    order among equal magnitudes) and sets every survivor to exactly 1.
    """
    if not 0 < p_g < 1:
        raise InvalidConfig(f"p_g must lie in (0, 1), got {p_g}.")
    values = np.asarray(record.mask_snapshot, dtype=np.float64)
    support = np.asarray(record.support, dtype=np.float64)
    if values.shape != support.shape:
        raise ShapeMismatch(f"Mask snapshot {values.shape} and support {support.shape} differ.")

    rows, cols = np.nonzero(support)  # row-major
    remaining = rows.size
    n_prune = math.ceil(p_g * remaining)
    if n_prune >= remaining:
        raise EmptyMask(f"Pruning {n_prune} of {remaining} supported entries would empty the mask.")

    order = np.argsort(np.abs(values[rows, cols]), kind="stable")
    victims = order[:n_prune]
    new_support = support.copy()
    new_support[rows[victims], cols[victims]] = 0.0
    logger.debug("Pruned %d of %d mask entries.", n_prune, remaining)
    return MaskState(values=new_support.copy(), support=new_support)


def rewind_weights(net: NetworkInstance) -> NetworkInstance:
    """Restores every non-mask parameter to its initial value; resets Adam and BN statistics."""
    snapshot = net.params.theta0
    for name, tensor in net.params.theta.items():
        if name == MASK_KEY:
            continue
        if name not in snapshot:
            raise MissingSnapshot(f"No initial value stored for parameter '{name}'.")
        tensor.data = snapshot[name].copy()
        tensor.zero_grad()
    net.params.reset_optimizer()
    net.reset_running_stats()
    return net


def select_ticket(records: List[TicketRecord], tolerance: float = SELECTION_TOLERANCE) -> TicketRecord:
    """Highest validation accuracy; records within ``tolerance`` of it go to the lowest density."""
    if not records:
        raise InvalidConfig("No ticket records to select from.")
    best = max(r.best_val_accuracy for r in records)
    tied = [r for r in records if r.best_val_accuracy >= best - tolerance - 1e-12]
    return min(tied, key=lambda r: (r.density, -r.round))


def find_ticket(
        net: NetworkInstance,
        data: TimepointDataset,
        cfg: PruneConfig,
        on_epoch: Optional[EpochCallback] = None,
        on_round: Optional[Callable[[TicketRecord], None]] = None,
) -> TicketSearch:
    cfg.check()
    if not net.has_mask:
        raise InvalidConfig("Ticket search needs a model built with a trainable mask.")

    mask = MaskState.dense(net.spec.n_nodes)
    ladder = density_schedule(mask.n_edges, cfg.prune_rate, cfg.density_floor)
    search = TicketSearch()
    for round_index, remaining, _ in ladder:
        if mask.remaining_edges != remaining:
            raise EmptyMask(f"Round {round_index} has {mask.remaining_edges} edges, the schedule expects {remaining}.")
        record = train_round(net, mask, data, cfg, round_index, on_epoch)
        search.records.append(record)
        if on_round is not None:
            on_round(record)
        if round_index == ladder[-1][0]:
            break
        mask = prune_mask(record, cfg.prune_rate)
        rewind_weights(net)

    search.selected = select_ticket(search.records)
    logger.info("Selected round %d: density %.2f%%, val acc %.4f.",
                search.selected.round, 100 * search.selected.density, search.selected.best_val_accuracy)
    return search
