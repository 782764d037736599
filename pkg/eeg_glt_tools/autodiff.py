# eeg_glt_tools/autodiff.py
"""
Reverse-mode differentiation over numpy arrays, restricted to the layers the GCN
classifier needs, plus Adam.

Each op returns a Tensor that remembers its parents and a closure mapping the upstream
gradient to one gradient per parent. ``Tensor.backward`` walks the graph in reverse
topological order and accumulates into ``.grad`` of every tensor with requires_grad.
All arrays are float64.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Literal, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import (
    BatchTooSmall,
    InvalidLabel,
    InvalidRate,
    NonFiniteValue,
    ShapeMismatch,
)
from app.schemas.training import AdamConfig
from eeg_glt_tools.graph_core import LambdaMaxMode, inverse_sqrt_degree, power_iteration_lambda_max

logger = logging.getLogger(__name__)

Mode = Literal["train", "eval"]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
            self,
            data,
            requires_grad: bool = False,
            name: Optional[str] = None,
            _parents: Tuple["Tensor", ...] = (),
            _backward: Optional[Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None):
        """Backpropagate from this tensor. A scalar output is seeded with 1."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a seed gradient needs a scalar output.")
            grad = np.ones_like(self.data)

        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        grads: Dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and not node._parents:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not _needs_grad(parent):
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, name={self.name!r})"


def _needs_grad(t: Tensor) -> bool:
    return t.requires_grad or bool(t._parents)


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, op: str, parents: Tuple[Tensor, ...], backward) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{op} produced a non-finite value.")
    track = any(_needs_grad(p) for p in parents)
    return Tensor(data, _parents=parents if track else (), _backward=backward if track else None, name=op)


# --- Graph ops feeding the convolutions ---

def mask_adjacency(original: np.ndarray, mask: Tensor, support: Optional[np.ndarray] = None) -> Tensor:
    """A = A_original * m_g (* support). Pruned entries get zero gradient."""
    original = np.asarray(original, dtype=np.float64)
    gate = original if support is None else original * support
    if mask.shape != gate.shape:
        raise ShapeMismatch(f"Mask shape {mask.shape} does not match adjacency shape {gate.shape}.")
    return _result(mask.data * gate, "mask_adjacency", (mask,), lambda g: (g * gate,))


def scaled_laplacian(
        adjacency: Tensor,
        lambda_max_mode: LambdaMaxMode = "fixed_2",
        strict: bool = False,
) -> Tensor:
    """
    L~ = (2/lambda_max)(I - D^-1/2 A D^-1/2) - I with D from row sums.

    lambda_max is treated as a constant in the backward pass.
    """
    a = adjacency.data
    n = a.shape[0]
    degree = a.sum(axis=1)
    s = inverse_sqrt_degree(degree, strict=strict)
    normalized = s[:, None] * a * s[None, :]
    laplacian = np.eye(n) - normalized

    if lambda_max_mode == "fixed_2":
        lambda_max = 2.0
    else:
        lambda_max = power_iteration_lambda_max(laplacian)
        if lambda_max <= 0:
            lambda_max = 2.0
    c = 2.0 / lambda_max

    def backward(g):
        g_norm = -c * g
        grad_a = g_norm * np.outer(s, s)
        ds = (g_norm * a * s[None, :]).sum(axis=1) + (g_norm * a * s[:, None]).sum(axis=0)
        dd = np.where(degree > 0, -0.5 * s ** 3 * ds, 0.0)
        return (grad_a + dd[:, None],)

    return _result(c * laplacian - np.eye(n), "scaled_laplacian", (adjacency,), backward)


# --- Layers ---

def cheb_conv(x: Tensor, laplacian: Tensor, theta: Tensor, bias: Tensor) -> Tensor:
    """
    out = sum_k T_k(L~) x theta_k + bias, with T_k(L~) x built by the recurrence
    X_0 = x, X_1 = L~ x, X_k = 2 L~ X_{k-1} - X_{k-2}.

    Shapes: x (B, N, F_in), laplacian (N, N), theta (K, F_in, F_out),
    bias (N, F_out) or (F_out,).
    """
    x, laplacian = _as_tensor(x), _as_tensor(laplacian)
    if x.data.ndim != 3:
        raise ShapeMismatch(f"cheb_conv expects x of shape (B, N, F), got {x.shape}.")
    b, n, f_in = x.shape
    k_order, theta_in, f_out = theta.shape
    if laplacian.shape != (n, n):
        raise ShapeMismatch(f"Laplacian shape {laplacian.shape} does not fit {n} nodes.")
    if theta_in != f_in:
        raise ShapeMismatch(f"theta expects {theta_in} input features, x has {f_in}.")
    if bias.shape not in ((n, f_out), (f_out,)):
        raise ShapeMismatch(f"Bias shape {bias.shape} must be ({n}, {f_out}) or ({f_out},).")

    lap = laplacian.data
    terms = [x.data]
    if k_order >= 2:
        terms.append(lap @ x.data)
    for _ in range(2, k_order):
        terms.append(2.0 * (lap @ terms[-1]) - terms[-2])

    out = bias.data + sum(t @ theta.data[k] for k, t in enumerate(terms))

    def backward(g):
        d_theta = np.stack([np.tensordot(t, g, axes=([0, 1], [0, 1])) for t in terms])
        d_bias = g.sum(axis=0) if bias.data.ndim == 2 else g.sum(axis=(0, 1))
        d_terms = [g @ theta.data[k].T for k in range(k_order)]
        d_lap = np.zeros_like(lap)
        for k in range(k_order - 1, 1, -1):
            d_lap += 2.0 * np.tensordot(d_terms[k], terms[k - 1], axes=([0, 2], [0, 2]))
            d_terms[k - 1] = d_terms[k - 1] + 2.0 * (lap.T @ d_terms[k])
            d_terms[k - 2] = d_terms[k - 2] - d_terms[k]
        if k_order >= 2:
            d_lap += np.tensordot(d_terms[1], terms[0], axes=([0, 2], [0, 2]))
            d_terms[0] = d_terms[0] + lap.T @ d_terms[1]
        return d_terms[0], d_lap, d_theta, d_bias

    return _result(out, "cheb_conv", (x, laplacian, theta, bias), backward)


@dataclass
class BatchNormState:
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    eps: float = 1e-5

    @classmethod
    def fresh(cls, features: int, momentum: float = 0.1, eps: float = 1e-5) -> "BatchNormState":
        return cls(np.zeros(features), np.ones(features), momentum, eps)

    def reset(self):
        self.running_mean = np.zeros_like(self.running_mean)
        self.running_var = np.ones_like(self.running_var)


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState, mode: Mode = "train") -> Tensor:
    """
    Normalizes every feature (last axis) over all leading axes.

    Train mode uses batch statistics and updates the running ones; eval mode uses the
    running statistics.
    """
    data = x.data
    axes = tuple(range(data.ndim - 1))
    count = int(np.prod([data.shape[a] for a in axes]))

    if mode == "train":
        if data.shape[0] < 2:
            raise BatchTooSmall(f"Batch norm in train mode needs a batch of at least 2, got {data.shape[0]}.")
        mean = data.mean(axis=axes)
        var = data.var(axis=axes)
        inv_std = 1.0 / np.sqrt(var + state.eps)
        x_hat = (data - mean) * inv_std
        unbiased = var * count / max(count - 1, 1)
        state.running_mean = (1 - state.momentum) * state.running_mean + state.momentum * mean
        state.running_var = (1 - state.momentum) * state.running_var + state.momentum * unbiased

        def backward(g):
            d_gamma = (g * x_hat).sum(axis=axes)
            d_beta = g.sum(axis=axes)
            d_hat = g * gamma.data
            d_x = inv_std / count * (
                count * d_hat - d_hat.sum(axis=axes) - x_hat * (d_hat * x_hat).sum(axis=axes)
            )
            return d_x, d_gamma, d_beta
    else:
        inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
        x_hat = (data - state.running_mean) * inv_std

        def backward(g):
            return g * gamma.data * inv_std, (g * x_hat).sum(axis=axes), g.sum(axis=axes)

    return _result(gamma.data * x_hat + beta.data, "batch_norm", (x, gamma, beta), backward)


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    return _result(np.where(positive, x.data, 0.0), "relu", (x,), lambda g: (g * positive,))


def dropout(x: Tensor, rate: float = 0.5, mode: Mode = "train", rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout; identity in eval mode or at rate 0."""
    if not 0 <= rate < 1:
        raise InvalidRate(f"Dropout rate must lie in [0, 1), got {rate}.")
    if mode == "eval" or rate == 0:
        return x
    rng = rng if rng is not None else np.random.default_rng()
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _result(x.data * keep, "dropout", (x,), lambda g: (g * keep,))


def global_mean_pool(x: Tensor) -> Tensor:
    n = x.shape[1]
    return _result(
        x.data.mean(axis=1), "global_mean_pool", (x,),
        lambda g: (np.repeat(g[:, None, :] / n, n, axis=1),),
    )


def fully_connected(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    if x.data.ndim != 2 or x.shape[1] != weight.shape[0] or bias.shape != (weight.shape[1],):
        raise ShapeMismatch(
            f"fully_connected got x {x.shape}, W {weight.shape}, b {bias.shape}."
        )
    return _result(
        x.data @ weight.data + bias.data, "fully_connected", (x, weight, bias),
        lambda g: (g @ weight.data.T, x.data.T @ g, g.sum(axis=0)),
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or np.any(labels < 0) or np.any(labels >= n_classes):
        raise InvalidLabel(f"Labels must be integers in [0, {n_classes}).")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels.astype(int)] = 1.0
    return out


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """
    Mean cross-entropy of softmax(logits) against one-hot ``labels`` (an integer label
    vector is one-hot encoded first).
    """
    z = logits.data
    if z.ndim != 2 or z.shape[1] < 2:
        raise ShapeMismatch(f"Logits must be (B, O) with O >= 2, got {z.shape}.")
    labels = np.asarray(labels)
    y = one_hot(labels, z.shape[1]) if labels.ndim == 1 else labels.astype(np.float64)
    if y.shape != z.shape or not np.all((y == 0) | (y == 1)) or not np.all(y.sum(axis=1) == 1):
        raise InvalidLabel("Labels must be one-hot with exactly one hot entry per row.")

    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    batch = z.shape[0]
    loss = -(y * log_probs).sum() / batch
    probs = np.exp(log_probs)
    return _result(
        np.asarray(loss), "softmax_cross_entropy", (logits,),
        lambda g: (g * (probs - y) / batch,),
    )


# --- Parameters and optimizer ---

@dataclass
class ParamState:
    """All trainable tensors, their rewind snapshot and the Adam moments."""
    theta: Dict[str, Tensor]
    theta0: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "ParamState":
        theta = {name: Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
                 for name, value in arrays.items()}
        state = cls(theta=theta)
        state.snapshot()
        state.reset_optimizer()
        return state

    def snapshot(self):
        self.theta0 = {name: t.data.copy() for name, t in self.theta.items()}

    def reset_optimizer(self):
        self.adam_m = {name: np.zeros_like(t.data) for name, t in self.theta.items()}
        self.adam_v = {name: np.zeros_like(t.data) for name, t in self.theta.items()}
        self.step = 0

    def zero_grad(self):
        for t in self.theta.values():
            t.zero_grad()

    def grads(self) -> Dict[str, np.ndarray]:
        return {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in self.theta.items()}

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self.theta.items()}

    def n_parameters(self, exclude: Sequence[str] = ()) -> int:
        return int(sum(t.data.size for name, t in self.theta.items() if name not in exclude))


def adam_step(params: ParamState, grads: Dict[str, np.ndarray], cfg: AdamConfig) -> ParamState:
    """One bias-corrected Adam update, in place. Returns ``params`` for chaining."""
    for name, g in grads.items():
        if name not in params.theta:
            raise ShapeMismatch(f"Gradient for unknown parameter '{name}'.")
        if g.shape != params.theta[name].shape:
            raise ShapeMismatch(
                f"Gradient for '{name}' has shape {g.shape}, parameter has {params.theta[name].shape}."
            )

    params.step += 1
    bc1 = 1.0 - cfg.beta1 ** params.step
    bc2 = 1.0 - cfg.beta2 ** params.step

    for name, g in grads.items():
        m = params.adam_m.setdefault(name, np.zeros_like(g))
        v = params.adam_v.setdefault(name, np.zeros_like(g))
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        update = cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
        params.theta[name].data = params.theta[name].data - update
    return params


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
