# eeg_glt_tools/graph_core.py
"""
Adjacency construction (PCC, geodesic, masked), normalized/scaled Laplacians, the exact
spectral filter used as a test oracle, and Chebyshev-recurrence filtering.

Everything here is a pure function of its inputs.
"""

import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Literal, Optional

import numpy as np

from app.core.exceptions import (
    AsymmetricInput,
    DimensionMismatch,
    InvalidConfig,
    InvalidOrder,
    IsolatedNode,
    OffSphereCoordinate,
    ShapeMismatch,
    ZeroVarianceChannel,
)

logger = logging.getLogger(__name__)

LambdaMaxMode = Literal["fixed_2", "power_iteration"]

# Channels of the 10-10 system dropped by the 64-channel montage.
EXCLUDED_CHANNELS = ("F9", "NZ", "F10", "FT9", "FT10", "A1", "A2", "TP9", "TP10", "P9", "P10")


@dataclass(frozen=True)
class Graph:
    adjacency: np.ndarray
    self_loops_absent: bool = True

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.adjacency))


@dataclass(frozen=True)
class LaplacianBundle:
    degree: np.ndarray
    laplacian_norm: np.ndarray
    laplacian_scaled: np.ndarray
    lambda_max: float


@dataclass(frozen=True)
class SpectralBasis:
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    scaled_eigenvalues: np.ndarray


@dataclass(frozen=True)
class ChebBasis:
    order: int
    terms: List[np.ndarray] = field(default_factory=list)


@dataclass(frozen=True)
class ElectrodeLayout:
    names: List[str]
    coords: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        if self.coords.shape != (len(self.names), 3):
            raise ShapeMismatch(
                f"Layout has {len(self.names)} names but coordinates of shape {self.coords.shape}."
            )


def normalize_channel_name(label: str) -> str:
    """'Fc5.' -> 'FC5'. EDF labels carry trailing dots and mixed case."""
    return label.strip().rstrip(".").upper()


def load_default_layout() -> ElectrodeLayout:
    """The shipped unit-sphere positions of the 64 retained channels (EDF header order)."""
    text = resources.files("eeg_glt_tools").joinpath("data/electrodes_10_10.csv").read_text(encoding="utf-8")
    return parse_layout_csv(text)


def parse_layout_csv(text: str, radius: float = 1.0) -> ElectrodeLayout:
    names, rows = [], []
    for line_no, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if line_no == 0 and parts[0].lower() == "name":
            continue
        if len(parts) != 4:
            raise ShapeMismatch(f"Layout line {line_no + 1} has {len(parts)} columns, expected name,x,y,z.")
        names.append(normalize_channel_name(parts[0]))
        rows.append([float(v) for v in parts[1:]])
    return ElectrodeLayout(names=names, coords=np.asarray(rows, dtype=np.float64), radius=radius)


# --- Adjacency construction ---

def pcc_adjacency(signals: np.ndarray) -> Graph:
    """
    A = |P| - I where P is the Pearson correlation matrix of the channel rows.

    Args:
        signals: N x T matrix, one row per channel.

    Raises:
        DimensionMismatch: fewer than two samples per channel.
        ZeroVarianceChannel: a channel is constant.
    """
    x = np.asarray(signals, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DimensionMismatch(f"PCC needs an N x T matrix with T >= 2, got shape {x.shape}.")

    centered = x - x.mean(axis=1, keepdims=True)
    std = np.sqrt((centered ** 2).mean(axis=1))
    zero = np.flatnonzero(std == 0)
    if zero.size:
        raise ZeroVarianceChannel(int(zero[0]))

    cov = centered @ centered.T / x.shape[1]
    corr = cov / np.outer(std, std)
    adjacency = np.clip(np.abs(corr), 0.0, 1.0)
    np.fill_diagonal(adjacency, 0.0)
    return Graph(adjacency=adjacency)


def geodesic_distances(layout: ElectrodeLayout) -> np.ndarray:
    """Raw great-circle angles arccos(p_i . p_j / r^2); diagonal 0."""
    r = layout.radius
    norms = np.linalg.norm(layout.coords, axis=1)
    off = np.flatnonzero(np.abs(norms - r) > 1e-6)
    if off.size:
        i = int(off[0])
        raise OffSphereCoordinate(
            f"Electrode {layout.names[i]} lies at radius {norms[i]:.9f}, expected {r}."
        )
    cosines = np.clip(layout.coords @ layout.coords.T / r ** 2, -1.0, 1.0)
    distances = np.arccos(cosines)
    np.fill_diagonal(distances, 0.0)
    return distances


def geodesic_adjacency(layout: ElectrodeLayout, normalize: bool = True) -> Graph:
    """
    Great-circle distance adjacency. With ``normalize`` the off-diagonal entries are
    min-max scaled into [0, 1].
    """
    distances = geodesic_distances(layout)
    if normalize and layout.coords.shape[0] > 1:
        off_diag = ~np.eye(distances.shape[0], dtype=bool)
        lo, hi = distances[off_diag].min(), distances[off_diag].max()
        if hi > lo:
            distances = (distances - lo) / (hi - lo)
        else:
            distances = np.where(off_diag, 1.0, 0.0)
        np.fill_diagonal(distances, 0.0)
    return Graph(adjacency=distances)


def complete_graph(n_nodes: int) -> Graph:
    """A_original: ones everywhere except the diagonal."""
    adjacency = np.ones((n_nodes, n_nodes), dtype=np.float64)
    np.fill_diagonal(adjacency, 0.0)
    return Graph(adjacency=adjacency)


def masked_adjacency(original: Graph, mask) -> Graph:
    """
    Entrywise A_original * m_g. ``mask`` is a MaskState (anything with ``values``) or a
    plain N x N array. The result may be asymmetric.
    """
    values = getattr(mask, "values", mask)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != original.adjacency.shape:
        raise ShapeMismatch(
            f"Mask shape {values.shape} does not match adjacency shape {original.adjacency.shape}."
        )
    adjacency = original.adjacency * values
    np.fill_diagonal(adjacency, 0.0)
    return Graph(adjacency=adjacency)


# --- Laplacians ---

def inverse_sqrt_degree(degree: np.ndarray, strict: bool = False) -> np.ndarray:
    """D^-1/2 with non-positive degrees mapped to 0 (or IsolatedNode in strict mode)."""
    degree = np.asarray(degree, dtype=np.float64)
    dead = np.flatnonzero(degree <= 0)
    if dead.size:
        if strict:
            raise IsolatedNode(int(dead[0]))
        logger.warning("Nodes %s have non-positive degree; their D^-1/2 entries are set to 0.", dead.tolist())
    out = np.zeros_like(degree)
    alive = degree > 0
    out[alive] = 1.0 / np.sqrt(degree[alive])
    return out


def power_iteration_lambda_max(matrix: np.ndarray, iterations: int = 30, tol: float = 1e-6) -> float:
    """Dominant eigenvalue of the symmetric part of ``matrix`` (deterministic start vector)."""
    sym = 0.5 * (matrix + matrix.T)
    n = sym.shape[0]
    v = np.ones(n) / np.sqrt(n) + np.linspace(0.0, 1e-3, n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = sym @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        new_estimate = float(v @ sym @ v)
        if abs(new_estimate - estimate) < tol:
            estimate = new_estimate
            break
        estimate = new_estimate
    return estimate


def laplacian_bundle(
        g: Graph,
        lambda_max_mode: LambdaMaxMode = "fixed_2",
        strict: bool = False,
) -> LaplacianBundle:
    """
    L = I - D^-1/2 A D^-1/2 and L~ = 2L/lambda_max - I.

    D is built from row sums and the product is formed verbatim even for asymmetric A.
    """
    a = np.asarray(g.adjacency, dtype=np.float64)
    n = a.shape[0]
    degree_vec = a.sum(axis=1)
    d_inv_sqrt = inverse_sqrt_degree(degree_vec, strict=strict)
    laplacian = np.eye(n) - d_inv_sqrt[:, None] * a * d_inv_sqrt[None, :]

    if lambda_max_mode == "fixed_2":
        lambda_max = 2.0
    elif lambda_max_mode == "power_iteration":
        lambda_max = power_iteration_lambda_max(laplacian)
        if lambda_max <= 0:
            logger.warning("Power iteration returned lambda_max=%s; falling back to 2.0.", lambda_max)
            lambda_max = 2.0
    else:
        raise InvalidConfig(f"Unknown lambda_max mode '{lambda_max_mode}'.")

    scaled = (2.0 / lambda_max) * laplacian - np.eye(n)
    return LaplacianBundle(
        degree=np.diag(degree_vec),
        laplacian_norm=laplacian,
        laplacian_scaled=scaled,
        lambda_max=float(lambda_max),
    )


def spectral_basis(bundle: LaplacianBundle) -> SpectralBasis:
    """Eigendecomposition of a symmetric L and the scaled eigenvalues 2*Lambda/Lambda_max - I."""
    laplacian = bundle.laplacian_norm
    _require_symmetric(laplacian, "L")
    eigenvalues, eigenvectors = np.linalg.eigh(laplacian)
    lam_max = eigenvalues.max()
    scaled = 2.0 * eigenvalues / lam_max - 1.0 if lam_max > 0 else eigenvalues - 1.0
    return SpectralBasis(eigenvectors=eigenvectors, eigenvalues=eigenvalues, scaled_eigenvalues=scaled)


def chebyshev_basis(bundle: LaplacianBundle, K: int) -> ChebBasis:
    """[T_0(L~), ..., T_{K-1}(L~)] via T_k = 2 L~ T_{k-1} - T_{k-2}."""
    if K < 1:
        raise InvalidOrder(f"Chebyshev order must be >= 1, got {K}.")
    scaled = bundle.laplacian_scaled
    terms = [np.eye(scaled.shape[0])]
    if K >= 2:
        terms.append(scaled.copy())
    for _ in range(2, K):
        terms.append(2.0 * scaled @ terms[-1] - terms[-2])
    return ChebBasis(order=K, terms=terms)


def chebyshev_filter(basis: ChebBasis, theta, x: np.ndarray) -> np.ndarray:
    """sum_k theta_k T_k(L~) x."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] != basis.order:
        raise ShapeMismatch(f"{theta.shape[0]} coefficients for a basis of order {basis.order}.")
    return sum(t * (term @ x) for t, term in zip(theta, basis.terms))


def chebyshev_scalar(k: int, values: np.ndarray) -> np.ndarray:
    """T_k evaluated elementwise on values in [-1, 1]."""
    return np.cos(k * np.arccos(np.clip(values, -1.0, 1.0)))


def spectral_conv_oracle(bundle: LaplacianBundle, theta, x: np.ndarray) -> np.ndarray:
    """
    U (sum_k theta_k T_k(Lambda_hat)) U^T x computed by eigendecomposition of L~.

    Only defined for symmetric L~; intended for testing, never for training.
    """
    scaled = bundle.laplacian_scaled
    _require_symmetric(scaled, "L~")
    eigenvalues, u = np.linalg.eigh(0.5 * (scaled + scaled.T))
    theta = np.asarray(theta, dtype=np.float64)

    # Chebyshev polynomials of the diagonal, by the same recurrence on scalars
    t_prev, t_curr = np.ones_like(eigenvalues), eigenvalues
    response = theta[0] * t_prev
    for k in range(1, theta.shape[0]):
        if k > 1:
            t_prev, t_curr = t_curr, 2.0 * eigenvalues * t_curr - t_prev
        response = response + theta[k] * t_curr
    return u @ (response[:, None] * (u.T @ x)) if x.ndim == 2 else u @ (response * (u.T @ x))


def _require_symmetric(matrix: np.ndarray, name: str, tol: float = 1e-9):
    gap = np.abs(matrix - matrix.T).max()
    if gap > tol:
        raise AsymmetricInput(f"{name} is not symmetric (max |M - M^T| = {gap:.3e}).")


# --- CSV exchange ---

def adjacency_to_csv(adjacency: np.ndarray) -> str:
    """Header-less, row-major, '.' decimal, LF endings."""
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in np.asarray(adjacency))


def adjacency_from_csv(text: str) -> np.ndarray:
    rows = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeMismatch(f"Adjacency CSV must be square, got shape {matrix.shape}.")
    return matrix


def layout_for_channels(layout: ElectrodeLayout, channel_names: List[str]) -> Optional[ElectrodeLayout]:
    """Reorder a layout to the given channel order; None if any channel is missing."""
    index = {name: i for i, name in enumerate(layout.names)}
    wanted = [normalize_channel_name(n) for n in channel_names]
    if any(n not in index for n in wanted):
        return None
    order = [index[n] for n in wanted]
    return ElectrodeLayout(names=wanted, coords=layout.coords[order], radius=layout.radius)
