# eeg_glt_tools/chebnet.py
"""
Chebyshev spectral GCN classifier: (Conv -> BN -> ReLU) x L -> mean pool -> FC stack.

A network either runs on a fixed adjacency (geodesic/PCC) or on A_original * m_g with a
trainable mask, in which case the scaled Laplacian is rebuilt from the mask on every
forward pass so the mask receives gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from app.core.exceptions import EmptySplit, MissingSnapshot, NonFiniteLoss, ShapeMismatch
from app.schemas.metrics import MetricsReport
from app.schemas.model import ModelSpec
from app.schemas.training import AdamConfig
from eeg_glt_tools import autodiff as ad
from eeg_glt_tools.graph_core import complete_graph
from eeg_glt_tools.metrics import classification_metrics

logger = logging.getLogger(__name__)

MASK_KEY = "adjacency_mask"
AdjacencySource = Literal["geodesic", "pcc", "masked", "fixed"]


@dataclass
class NetworkInstance:
    spec: ModelSpec
    params: ad.ParamState
    bn_states: Dict[str, ad.BatchNormState]
    adjacency_source: AdjacencySource
    adjacency: np.ndarray
    support: Optional[np.ndarray] = None
    lambda_max_mode: str = "fixed_2"
    strict_isolated_nodes: bool = False
    seed: int = 0
    dropout_rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @property
    def has_mask(self) -> bool:
        return MASK_KEY in self.params.theta

    def set_adjacency(self, adjacency: np.ndarray, source: AdjacencySource = "fixed"):
        if adjacency.shape != (self.spec.n_nodes, self.spec.n_nodes):
            raise ShapeMismatch(
                f"Adjacency shape {adjacency.shape} does not fit {self.spec.n_nodes} nodes."
            )
        self.adjacency = np.asarray(adjacency, dtype=np.float64)
        self.adjacency_source = source

    def reset_running_stats(self):
        for state in self.bn_states.values():
            state.reset()


def seed_streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """One seed -> independent generators for init, dropout and shuffling."""
    init_seq, dropout_seq, shuffle_seq = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init_seq), np.random.default_rng(dropout_seq),
            np.random.default_rng(shuffle_seq))


def build_model(
        spec: ModelSpec,
        seed: int = 0,
        adjacency: Optional[np.ndarray] = None,
        adjacency_source: AdjacencySource = "fixed",
        trainable_mask: bool = False,
        lambda_max_mode: str = "fixed_2",
        strict_isolated_nodes: bool = False,
) -> NetworkInstance:
    """
    Allocates and initializes every parameter of the layer plan and stores the rewind
    snapshot. With ``trainable_mask`` the graph is A_original (all ones off the diagonal)
    times a trainable mask initialised to A_original. With ``strict_isolated_nodes`` a node
    that loses every edge raises IsolatedNode instead of a warning.
    """
    spec = spec.check()
    init_rng, dropout_rng, _ = seed_streams(seed)
    n = spec.n_nodes
    arrays: Dict[str, np.ndarray] = {}
    bn_states: Dict[str, ad.BatchNormState] = {}

    f_in = 1
    for i, (f_out, k) in enumerate(zip(spec.conv_filters, spec.conv_orders), start=1):
        arrays[f"conv{i}.theta"] = ad.glorot_uniform(init_rng, (k, f_in, f_out), fan_in=k * f_in, fan_out=f_out)
        arrays[f"conv{i}.bias"] = np.zeros((n, f_out) if spec.per_node_bias else (f_out,))
        arrays[f"bnc{i}.gamma"] = np.ones(f_out)
        arrays[f"bnc{i}.beta"] = np.zeros(f_out)
        bn_states[f"bnc{i}"] = ad.BatchNormState.fresh(f_out)
        f_in = f_out

    d_in = f_in
    for j, d_out in enumerate(spec.fc_nodes, start=1):
        arrays[f"fc{j}.weight"] = ad.glorot_uniform(init_rng, (d_in, d_out), fan_in=d_in, fan_out=d_out)
        arrays[f"fc{j}.bias"] = np.zeros(d_out)
        if spec.has_bn_fc and j < len(spec.fc_nodes):
            arrays[f"bnfc{j}.gamma"] = np.ones(d_out)
            arrays[f"bnfc{j}.beta"] = np.zeros(d_out)
            bn_states[f"bnfc{j}"] = ad.BatchNormState.fresh(d_out)
        d_in = d_out

    original = complete_graph(n).adjacency
    if trainable_mask:
        arrays[MASK_KEY] = original.copy()
        adjacency, adjacency_source = original, "masked"
    elif adjacency is None:
        adjacency = original

    net = NetworkInstance(
        spec=spec,
        params=ad.ParamState.from_arrays(arrays),
        bn_states=bn_states,
        adjacency_source=adjacency_source,
        adjacency=np.asarray(adjacency, dtype=np.float64),
        support=(original > 0).astype(np.float64) if trainable_mask else None,
        lambda_max_mode=lambda_max_mode,
        strict_isolated_nodes=strict_isolated_nodes,
        seed=seed,
        dropout_rng=dropout_rng,
    )
    net.set_adjacency(net.adjacency, adjacency_source)
    logger.debug("Built model %s with %d parameters.", spec.name, net.params.n_parameters())
    return net


def graph_operator(net: NetworkInstance) -> ad.Tensor:
    """Scaled Laplacian of the current adjacency; differentiable in the mask when present."""
    if net.has_mask:
        adjacency = ad.mask_adjacency(net.adjacency, net.params.theta[MASK_KEY], net.support)
    else:
        adjacency = ad.Tensor(net.adjacency)
    return ad.scaled_laplacian(adjacency, net.lambda_max_mode, strict=net.strict_isolated_nodes)


def forward(
        net: NetworkInstance,
        X: np.ndarray,
        mode: Literal["train", "eval"] = "train",
        laplacian: Optional[ad.Tensor] = None,
) -> ad.Tensor:
    """Logits (B x O) for a batch of single-time-point node signals X (B x N x 1)."""
    x_data = np.asarray(X, dtype=np.float64)
    if x_data.ndim == 2:
        x_data = x_data[:, :, None]
    if x_data.ndim != 3 or x_data.shape[1] != net.spec.n_nodes or x_data.shape[2] != 1:
        raise ShapeMismatch(f"Expected input of shape (B, {net.spec.n_nodes}, 1), got {np.shape(X)}.")

    theta = net.params.theta
    lap = laplacian if laplacian is not None else graph_operator(net)
    h = ad.Tensor(x_data)

    for i in range(1, len(net.spec.conv_filters) + 1):
        h = ad.cheb_conv(h, lap, theta[f"conv{i}.theta"], theta[f"conv{i}.bias"])
        h = ad.batch_norm(h, theta[f"bnc{i}.gamma"], theta[f"bnc{i}.beta"], net.bn_states[f"bnc{i}"], mode)
        h = ad.relu(h)

    h = ad.global_mean_pool(h)

    n_fc = len(net.spec.fc_nodes)
    for j in range(1, n_fc + 1):
        h = ad.fully_connected(h, theta[f"fc{j}.weight"], theta[f"fc{j}.bias"])
        if j == n_fc:
            break
        if net.spec.has_bn_fc:
            h = ad.batch_norm(h, theta[f"bnfc{j}.gamma"], theta[f"bnfc{j}.beta"], net.bn_states[f"bnfc{j}"], mode)
        h = ad.relu(h)
        h = ad.dropout(h, net.spec.dropout_rate, mode, net.dropout_rng)
    return h


def predict(net: NetworkInstance, X: np.ndarray, batch_size: int = 4096) -> np.ndarray:
    """Eval-mode class predictions."""
    if len(X) == 0:
        return np.zeros(0, dtype=int)
    lap = graph_operator(net)
    out = [
        forward(net, X[start:start + batch_size], "eval", lap).data.argmax(axis=1)
        for start in range(0, len(X), batch_size)
    ]
    return np.concatenate(out)


def accuracy(net: NetworkInstance, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        raise EmptySplit("Cannot evaluate accuracy on an empty split.")
    return float(np.mean(predict(net, X) == np.asarray(y)))


def predict_metrics(net: NetworkInstance, X: np.ndarray, y: np.ndarray) -> MetricsReport:
    if len(y) == 0:
        raise EmptySplit("Cannot compute metrics on an empty split.")
    return classification_metrics(y, predict(net, X), net.spec.n_classes)


def train_step(net: NetworkInstance, X: np.ndarray, y: np.ndarray, cfg: AdamConfig) -> float:
    """One Adam update on a mini-batch; pruned mask entries neither receive gradient nor move."""
    net.params.zero_grad()
    logits = forward(net, X, "train")
    loss = ad.softmax_cross_entropy(logits, y)
    if not np.isfinite(loss.data):
        raise NonFiniteLoss(f"Loss became non-finite at optimizer step {net.params.step}.")
    loss.backward()

    grads = net.params.grads()
    if net.has_mask and net.support is not None:
        grads[MASK_KEY] = grads[MASK_KEY] * net.support
    ad.adam_step(net.params, grads, cfg)
    if net.has_mask and net.support is not None:
        mask = net.params.theta[MASK_KEY]
        mask.data = mask.data * net.support
    return float(loss.data)


def train_epoch(
        net: NetworkInstance,
        X: np.ndarray,
        y: np.ndarray,
        batch_size: int,
        cfg: AdamConfig,
        shuffle_rng: np.random.Generator,
        frozen: Optional[List[str]] = None,
) -> float:
    """
    One pass over shuffled mini-batches; returns the mean batch loss. A trailing batch of
    a single sample is dropped (batch norm needs two). ``frozen`` parameters get zero
    gradient.
    """
    order = shuffle_rng.permutation(len(X))
    losses = []
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        if len(idx) < 2:
            continue
        if frozen:
            losses.append(_train_step_frozen(net, X[idx], y[idx], cfg, frozen))
        else:
            losses.append(train_step(net, X[idx], y[idx], cfg))
    return float(np.mean(losses)) if losses else float("nan")


def _train_step_frozen(net, X, y, cfg, frozen):
    saved = {name: net.params.theta[name].data.copy() for name in frozen}
    loss = train_step(net, X, y, cfg)
    for name, value in saved.items():
        net.params.theta[name].data = value
    return loss


def closed_form_parameter_count(spec: ModelSpec) -> int:
    """Sum of the weight and bias sizes of every layer (mask excluded)."""
    total, f_in = 0, 1
    for f_out, k in zip(spec.conv_filters, spec.conv_orders):
        bias = spec.n_nodes * f_out if spec.per_node_bias else f_out
        total += f_in * f_out * k + bias + 2 * f_out
        f_in = f_out
    d_in = f_in
    for j, d_out in enumerate(spec.fc_nodes, start=1):
        total += d_in * d_out + d_out
        if spec.has_bn_fc and j < len(spec.fc_nodes):
            total += 2 * d_out
        d_in = d_out
    return total


def state_arrays(net: NetworkInstance) -> Dict[str, np.ndarray]:
    """Trainable parameters plus batch-norm running statistics, copied."""
    arrays = {name: value.copy() for name, value in net.params.arrays().items()}
    for key, state in net.bn_states.items():
        arrays[f"{key}.running_mean"] = state.running_mean.copy()
        arrays[f"{key}.running_var"] = state.running_var.copy()
    return arrays


def load_state_arrays(net: NetworkInstance, arrays: Dict[str, np.ndarray]) -> NetworkInstance:
    """Inverse of ``state_arrays`` for a network with the same layer plan."""
    for name, tensor in net.params.theta.items():
        if name not in arrays:
            raise MissingSnapshot(f"Stored state lacks parameter '{name}'.")
        if arrays[name].shape != tensor.shape:
            raise ShapeMismatch(f"Stored '{name}' has shape {arrays[name].shape}, model expects {tensor.shape}.")
        tensor.data = np.asarray(arrays[name], dtype=np.float64).copy()
    for key, state in net.bn_states.items():
        mean, var = arrays.get(f"{key}.running_mean"), arrays.get(f"{key}.running_var")
        if mean is not None and var is not None:
            state.running_mean, state.running_var = mean.copy(), var.copy()
    return net
