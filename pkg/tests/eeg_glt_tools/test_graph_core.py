import numpy as np
import pytest

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
from eeg_glt_tools.graph_core import (
    ElectrodeLayout,
    EXCLUDED_CHANNELS,
    Graph,
    adjacency_from_csv,
    adjacency_to_csv,
    chebyshev_basis,
    chebyshev_filter,
    chebyshev_scalar,
    complete_graph,
    geodesic_adjacency,
    geodesic_distances,
    laplacian_bundle,
    layout_for_channels,
    load_default_layout,
    masked_adjacency,
    normalize_channel_name,
    parse_layout_csv,
    pcc_adjacency,
    power_iteration_lambda_max,
    spectral_basis,
    spectral_conv_oracle,
)


def random_symmetric_graph(rng, n):
    upper = np.triu(rng.random((n, n)), k=1)
    return Graph(adjacency=upper + upper.T)


# --- Electrode layout ---
def test_default_layout_has_64_channels_on_unit_sphere():
    layout = load_default_layout()
    assert len(layout.names) == 64
    assert len(set(layout.names)) == 64
    np.testing.assert_allclose(np.linalg.norm(layout.coords, axis=1), 1.0, atol=1e-6)
    assert not set(EXCLUDED_CHANNELS) & set(layout.names)


def test_normalize_channel_name_strips_dots_and_case():
    assert normalize_channel_name("Fc5.") == "FC5"
    assert normalize_channel_name(" Cz..") == "CZ"


def test_parse_layout_csv_skips_header_and_rejects_bad_rows():
    layout = parse_layout_csv("name,x,y,z\nCz,0,0,1\nFpz,0,1,0\n")
    assert layout.names == ["CZ", "FPZ"]
    with pytest.raises(ShapeMismatch):
        parse_layout_csv("Cz,0,0\n")


def test_layout_for_channels_reorders_and_reports_missing():
    layout = parse_layout_csv("Cz,0,0,1\nFpz,0,1,0\nOz,0,-1,0\n")
    reordered = layout_for_channels(layout, ["Oz.", "Cz"])
    assert reordered.names == ["OZ", "CZ"]
    np.testing.assert_array_equal(reordered.coords[0], [0, -1, 0])
    assert layout_for_channels(layout, ["T7"]) is None


# --- PCC adjacency ---
def test_pcc_matches_covariance_oracle(rng):
    signals = rng.standard_normal((6, 200))
    A = pcc_adjacency(signals).adjacency

    expected = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            if i == j:
                continue
            xi = signals[i] - signals[i].mean()
            xj = signals[j] - signals[j].mean()
            cov = (xi * xj).sum() / 200
            expected[i, j] = abs(cov / (np.sqrt((xi ** 2).sum() / 200) * np.sqrt((xj ** 2).sum() / 200)))
    np.testing.assert_allclose(A, expected, atol=1e-12)


def test_pcc_is_symmetric_bounded_with_zero_diagonal(rng):
    A = pcc_adjacency(rng.standard_normal((10, 50))).adjacency
    np.testing.assert_array_equal(A, A.T)
    assert np.all(np.diag(A) == 0)
    assert np.all((A >= 0) & (A <= 1))


def test_pcc_of_identical_channels_is_one(rng):
    row = rng.standard_normal(30)
    A = pcc_adjacency(np.vstack([row, 2 * row + 1, -row])).adjacency
    np.testing.assert_allclose(A[0, 1:], [1.0, 1.0], atol=1e-12)


def test_pcc_ignores_per_channel_affine_rescaling(rng):
    signals = rng.standard_normal((6, 200))
    scale = rng.uniform(0.2, 5.0, size=(6, 1))
    shift = rng.uniform(-10.0, 10.0, size=(6, 1))
    np.testing.assert_allclose(pcc_adjacency(scale * signals + shift).adjacency,
                               pcc_adjacency(signals).adjacency, atol=1e-10)


def test_pcc_errors(rng):
    signals = rng.standard_normal((3, 20))
    signals[1] = 4.0
    with pytest.raises(ZeroVarianceChannel) as exc:
        pcc_adjacency(signals)
    assert exc.value.channel == 1
    with pytest.raises(DimensionMismatch):
        pcc_adjacency(rng.standard_normal((3, 1)))


# --- Geodesic adjacency ---
def test_geodesic_raw_distances_of_orthogonal_points():
    layout = parse_layout_csv("a,1,0,0\nb,0,1,0\nc,-1,0,0\n")
    D = geodesic_distances(layout)
    np.testing.assert_allclose(D[0, 1], np.pi / 2)
    np.testing.assert_allclose(D[0, 2], np.pi)
    np.testing.assert_array_equal(np.diag(D), 0)


def test_geodesic_adjacency_is_normalized_and_symmetric():
    A = geodesic_adjacency(load_default_layout()).adjacency
    off = ~np.eye(64, dtype=bool)
    np.testing.assert_allclose(A, A.T)
    assert A[off].min() == pytest.approx(0.0)
    assert A[off].max() == pytest.approx(1.0)
    assert np.all(np.diag(A) == 0)


def test_geodesic_adjacency_ignores_a_global_rotation(rng):
    layout = load_default_layout()
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    rotation = q * np.sign(np.diag(r))
    rotated = ElectrodeLayout(names=layout.names, coords=layout.coords @ rotation.T, radius=layout.radius)
    np.testing.assert_allclose(geodesic_adjacency(rotated).adjacency, geodesic_adjacency(layout).adjacency,
                               atol=1e-9)


def test_geodesic_rejects_points_off_the_sphere():
    layout = ElectrodeLayout(names=["a", "b"], coords=np.array([[1.0, 0, 0], [0, 2.0, 0]]))
    with pytest.raises(OffSphereCoordinate):
        geodesic_distances(layout)


# --- Masked adjacency ---
def test_complete_and_masked_adjacency():
    original = complete_graph(4)
    assert original.nnz == 12
    mask = np.ones((4, 4))
    mask[0, 1] = 0.0
    A = masked_adjacency(original, mask).adjacency
    assert A[0, 1] == 0 and A[1, 0] == 1
    with pytest.raises(ShapeMismatch):
        masked_adjacency(original, np.ones((3, 3)))


# --- Laplacians ---
def test_laplacian_of_symmetric_graph_has_spectrum_in_0_2(rng):
    bundle = laplacian_bundle(random_symmetric_graph(rng, 12))
    eigenvalues = np.linalg.eigvalsh(bundle.laplacian_norm)
    assert eigenvalues.min() > -1e-10
    assert eigenvalues.max() < 2 + 1e-10
    np.testing.assert_allclose(bundle.laplacian_scaled, bundle.laplacian_norm - np.eye(12))
    assert bundle.lambda_max == 2.0


def test_triangle_spectrum():
    eigenvalues = np.linalg.eigvalsh(laplacian_bundle(complete_graph(3)).laplacian_norm)
    np.testing.assert_allclose(eigenvalues, [0.0, 1.5, 1.5], atol=1e-9)


def test_power_iteration_lambda_max():
    # complete graph on n nodes: spectrum {0, n/(n-1)}
    bundle = laplacian_bundle(complete_graph(6), lambda_max_mode="power_iteration")
    assert bundle.lambda_max == pytest.approx(6 / 5, rel=1e-6)
    np.testing.assert_allclose(bundle.laplacian_scaled, (2 / 1.2) * bundle.laplacian_norm - np.eye(6), atol=1e-5)
    assert power_iteration_lambda_max(np.zeros((3, 3))) == 0.0


def test_power_iteration_never_overshoots(rng):
    bundle = laplacian_bundle(random_symmetric_graph(rng, 10), lambda_max_mode="power_iteration")
    exact = np.linalg.eigvalsh(bundle.laplacian_norm).max()
    assert 0.5 * exact < bundle.lambda_max <= exact + 1e-9


def test_isolated_node_is_zeroed_or_strict():
    A = complete_graph(4).adjacency
    A[2, :] = 0.0
    A[:, 2] = 0.0
    bundle = laplacian_bundle(Graph(adjacency=A))
    assert bundle.laplacian_norm[2, 2] == 1.0
    assert np.all(bundle.laplacian_norm[2, [0, 1, 3]] == 0)
    with pytest.raises(IsolatedNode) as exc:
        laplacian_bundle(Graph(adjacency=A), strict=True)
    assert exc.value.node == 2


def test_unknown_lambda_mode_is_rejected():
    with pytest.raises(InvalidConfig):
        laplacian_bundle(complete_graph(3), lambda_max_mode="guess")


def test_spectral_basis_scales_into_unit_interval(rng):
    basis = spectral_basis(laplacian_bundle(random_symmetric_graph(rng, 8)))
    assert basis.scaled_eigenvalues.max() == pytest.approx(1.0)
    assert basis.scaled_eigenvalues.min() >= -1 - 1e-12


# --- Chebyshev filtering ---
@pytest.mark.parametrize("n_nodes", [4, 8, 16])
@pytest.mark.parametrize("order", [2, 5])
def test_chebyshev_recurrence_matches_spectral_oracle(n_nodes, order):
    rng = np.random.default_rng(n_nodes * 10 + order)
    for _ in range(50):
        bundle = laplacian_bundle(random_symmetric_graph(rng, n_nodes))
        theta = rng.standard_normal(order)
        x = rng.standard_normal((n_nodes, 3))
        fast = chebyshev_filter(chebyshev_basis(bundle, order), theta, x)
        exact = spectral_conv_oracle(bundle, theta, x)
        np.testing.assert_allclose(fast, exact, atol=1e-8)


def test_chebyshev_scalar_matches_cosine_definition():
    values = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(chebyshev_scalar(0, values), 1.0)
    np.testing.assert_allclose(chebyshev_scalar(1, values), values, atol=1e-12)
    np.testing.assert_allclose(chebyshev_scalar(2, values), 2 * values ** 2 - 1, atol=1e-12)


def test_chebyshev_basis_errors(rng):
    bundle = laplacian_bundle(random_symmetric_graph(rng, 4))
    with pytest.raises(InvalidOrder):
        chebyshev_basis(bundle, 0)
    with pytest.raises(ShapeMismatch):
        chebyshev_filter(chebyshev_basis(bundle, 3), [1.0, 2.0], np.ones(4))


def test_oracle_rejects_asymmetric_laplacian():
    A = complete_graph(4).adjacency
    A[0, 1] = 0.0
    with pytest.raises(AsymmetricInput):
        spectral_conv_oracle(laplacian_bundle(Graph(adjacency=A)), [1.0, 1.0], np.ones(4))


# --- CSV exchange ---
def test_adjacency_csv_is_exact_and_square(rng):
    A = rng.random((5, 5))
    text = adjacency_to_csv(A)
    assert text.endswith("\n") and "\r" not in text
    np.testing.assert_array_equal(adjacency_from_csv(text), A)
    with pytest.raises(ShapeMismatch):
        adjacency_from_csv("1,2\n")
