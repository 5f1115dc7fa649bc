import logging
import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from kernseq.embed import EmbeddingMatrix
from kernseq.exceptions import ConfigError, KernelError
from kernseq.kernel import (
    KERNEL_KINDS,
    KINDS,
    UNIT_DIAGONAL,
    KernelMatrix,
    KernelParams,
    additive_chi2,
    chi2,
    cosine,
    gaussian,
    isolation_fit,
    isolation_value,
    kernel_matrix,
    kernel_value,
    laplacian,
    linear,
    polynomial,
    resolve_params,
    sigmoid,
)

# ==========================================================================================
# ==========================================================================================
# File:    kernel_test.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file contains unit tests for the pairwise kernels, the isolation kernel
#          and blocked kernel matrix construction in kernel.py
# ==========================================================================================
# ==========================================================================================
# Test support code


def random_embedding(n: int = 30, d: int = 20, seed: int = 0) -> EmbeddingMatrix:
    """Nonnegative random rows so every kernel kind accepts them."""
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(rng.random((n, d)), [f"r{i}" for i in range(n)], [f"f{j}" for j in range(d)])


# ==========================================================================================
# ==========================================================================================
# Pairwise kernels


def test_scalar_kernels_hand_values():
    """Small vectors give the textbook values."""
    x, y = [1.0, 0.0], [0.0, 1.0]
    assert cosine(x, y) == 0.0
    assert cosine([1.0, 1.0], [2.0, 2.0]) == pytest.approx(1.0)
    assert linear([1.0, 2.0], [3.0, 4.0], c=1.0) == 12.0
    assert polynomial([1.0, 2.0], [3.0, 4.0], r=1.0, d=2) == 144.0
    assert gaussian(x, y, sigma=1.0) == pytest.approx(math.exp(-1.0))
    assert laplacian(x, y, sigma=1.0) == pytest.approx(math.exp(-1.0))
    assert sigmoid([1.0], [1.0], gamma=1.0, c0=0.0) == pytest.approx(math.tanh(1.0))
    assert chi2([1.0, 0.0], [1.0, 0.0]) == 1.0
    assert additive_chi2([1.0, 1.0], [1.0, 3.0]) == pytest.approx(1.0 + 1.5)


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("alpha,beta", [(0.5, 3.0), (10.0, 1e-3), (7.0, 7.0)], ids=["mixed", "wide", "equal"])
def test_cosine_ignores_positive_scaling(alpha, beta):
    """Scaling either vector by a positive factor leaves the cosine unchanged."""
    rng = np.random.default_rng(12)
    x, y = rng.standard_normal(16), rng.standard_normal(16)
    assert cosine(alpha * x, beta * y) == pytest.approx(cosine(x, y), rel=1e-12, abs=1e-15)


# ------------------------------------------------------------------------------------------


def test_cosine_zero_norm_raises():
    """Cosine of a zero vector is undefined."""
    with pytest.raises(KernelError, match="zero-norm"):
        cosine([0.0, 0.0], [1.0, 0.0])


# ------------------------------------------------------------------------------------------


def test_chi2_negative_entry_names_index():
    """Negative chi-squared input reports the offending index."""
    with pytest.raises(KernelError, match="index 1"):
        chi2([1.0, -2.0], [1.0, 1.0])
    with pytest.raises(KernelError, match="index 0"):
        additive_chi2([1.0], [-1.0])


# ------------------------------------------------------------------------------------------


def test_chi2_skips_zero_denominators():
    """Features that are zero in both vectors contribute nothing."""
    assert chi2([0.0, 2.0], [0.0, 2.0], gamma=0.5) == 1.0
    assert additive_chi2([0.0, 0.0], [0.0, 0.0]) == 0.0


# ------------------------------------------------------------------------------------------


def test_dimension_mismatch():
    """Vectors of different length are rejected."""
    with pytest.raises(KernelError, match="Dimension mismatch"):
        linear([1.0, 2.0], [1.0])


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("sigma", [0.0, -1.0], ids=["zero", "negative"])
def test_gaussian_sigma_must_be_positive(sigma):
    """Non-positive widths are numeric errors for the scalar kernel."""
    with pytest.raises(KernelError):
        gaussian([1.0], [0.0], sigma)


# ==========================================================================================
# ==========================================================================================
# Parameters


def test_params_normalise_kind_and_validate():
    """Kinds are case and dash insensitive; bad values are configuration errors."""
    assert KernelParams(kind="Additive-Chi2").kind == "additive_chi2"
    for kwargs in ({"kind": "rbf"}, {"sigma": 0.0}, {"d": 0}, {"psi": 1}, {"t_trees": 0}):
        with pytest.raises(ConfigError):
            KernelParams(**kwargs)
    with pytest.raises(ConfigError):
        KernelParams(kind="chi2", gamma=-1.0)


# ------------------------------------------------------------------------------------------


def test_resolve_params_median_heuristic():
    """Unset sigma is the median pairwise distance; Laplacian uses Manhattan distance."""
    emb = random_embedding()
    gauss = resolve_params(KernelParams(kind="gaussian"), emb)
    assert gauss.sigma == pytest.approx(float(np.median(pdist(emb.rows))))
    lap = resolve_params(KernelParams(kind="laplacian"), emb)
    assert lap.sigma == pytest.approx(float(np.median(pdist(emb.rows, "cityblock"))))
    assert resolve_params(KernelParams(kind="sigmoid"), emb).gamma == pytest.approx(1 / 20)
    assert resolve_params(KernelParams(kind="chi2"), emb).gamma == 1.0


# ------------------------------------------------------------------------------------------


def test_resolve_params_sampled_pairs_are_seeded():
    """Above the pair budget the heuristic samples pairs reproducibly."""
    emb = random_embedding(n=80, d=5)
    p = KernelParams(kind="gaussian", sigma_sample_pairs=100, seed=3)
    assert resolve_params(p, emb).sigma == resolve_params(p, emb).sigma
    assert resolve_params(p, emb).sigma > 0


# ------------------------------------------------------------------------------------------


def test_resolve_params_zero_median_falls_back(caplog: pytest.LogCaptureFixture):
    """Identical rows give a zero median; sigma falls back to 1.0 with a warning."""
    X = np.ones((5, 3))
    with caplog.at_level(logging.WARNING, logger="kernseq.kernel"):
        p = resolve_params(KernelParams(kind="gaussian"), X)
    assert p.sigma == 1.0
    assert "sigma=1.0" in caplog.text


# ------------------------------------------------------------------------------------------


def test_resolve_params_keeps_explicit_values():
    """Explicit sigma and gamma are left untouched."""
    p = KernelParams(kind="gaussian", sigma=2.5)
    assert resolve_params(p, random_embedding()) is p


# ==========================================================================================
# ==========================================================================================
# Kernel matrices


@pytest.mark.parametrize("kind", [k for k in KINDS if k != "isolation"])
def test_kernel_matrix_matches_double_loop_oracle(kind):
    """Every blocked matrix equals the scalar kernel evaluated pair by pair."""
    emb = random_embedding()
    K = kernel_matrix(emb, KernelParams(kind=kind), block_rows=7)
    assert K.params is not None
    oracle = np.empty((emb.shape[0], emb.shape[0]))
    for i, x in enumerate(emb.rows):
        for j, y in enumerate(emb.rows):
            oracle[i, j] = kernel_value(x, y, K.params)
    if kind in UNIT_DIAGONAL:
        np.fill_diagonal(oracle, 1.0)
    np.testing.assert_allclose(K.values, oracle, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(K.values, K.values.T, atol=1e-9)


# ------------------------------------------------------------------------------------------


def test_kernel_registry_covers_pairwise_kinds():
    """Every kind except isolation has a scalar evaluator."""
    assert set(KERNEL_KINDS) == set(KINDS) - {"isolation"}
    with pytest.raises(KernelError, match="IsolationModel"):
        kernel_value([1.0], [1.0], KernelParams(kind="isolation"))


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("kind", sorted(UNIT_DIAGONAL))
def test_unit_diagonal_and_range(kind):
    """Normalised kinds have a unit diagonal and entries within [-1, 1]."""
    emb = random_embedding(n=25, d=6, seed=4)
    K = kernel_matrix(emb, KernelParams(kind=kind, psi=4, t_trees=50))
    np.testing.assert_array_equal(np.diag(K.values), np.ones(25))
    assert K.values.max() <= 1.0 and K.values.min() >= -1.0


# ------------------------------------------------------------------------------------------


def test_isolation_matrix_matches_model():
    """Isolation entries are the fraction of partitionings sharing a cell."""
    emb = random_embedding(n=20, d=4, seed=9)
    params = KernelParams(kind="isolation", psi=5, t_trees=40, seed=2)
    K = kernel_matrix(emb, params)
    model = isolation_fit(emb, 5, 40, 2)
    assert model.psi == 5 and model.t_trees == 40
    for i, j in [(0, 1), (3, 17), (5, 5), (19, 0)]:
        assert K.values[i, j] == pytest.approx(isolation_value(model, emb.rows[i], emb.rows[j]))
    assert np.all((K.values >= 0) & (K.values <= 1))


# ------------------------------------------------------------------------------------------


def test_isolation_fit_reproducible_and_bounded():
    """Equal seeds give equal partitionings; psi above n is refused."""
    X = random_embedding(n=10, d=3).rows
    a = isolation_fit(X, 4, 10, seed=1)
    b = isolation_fit(X, 4, 10, seed=1)
    np.testing.assert_array_equal(a.partitionings, b.partitionings)
    assert all(len(set(row)) == 4 for row in a.partitionings)
    with pytest.raises(KernelError, match="psi=11"):
        isolation_fit(X, 11, 10)
    with pytest.raises(KernelError, match="dimension"):
        a.cells(np.zeros((2, 5)))


# ------------------------------------------------------------------------------------------


def test_isolation_kernel_separates_blobs(blobs):
    """Pairs inside a blob share a cell more often than pairs split across blobs."""
    X, y = blobs(20, 2, 3, separation=20.0)
    emb = EmbeddingMatrix(X, [f"b{i}" for i in range(len(X))], ["x", "y", "z"])
    K = kernel_matrix(emb, KernelParams(kind="isolation", psi=2, t_trees=1000, seed=0)).values
    same = y[:, None] == y[None, :]
    off_diagonal = ~np.eye(len(X), dtype=bool)
    within = K[same & off_diagonal].mean()
    across = K[~same].mean()
    assert within > across


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["cosine", "gaussian", "isolation"])
def test_kernel_matrix_independent_of_threads(kind):
    """Thread count never changes the assembled matrix."""
    emb = random_embedding(n=40, d=8, seed=6)
    params = KernelParams(kind=kind, psi=6, t_trees=30, seed=1)
    serial = kernel_matrix(emb, params, threads=1, block_rows=8)
    threaded = kernel_matrix(emb, params, threads=4, block_rows=8)
    np.testing.assert_array_equal(serial.values, threaded.values)


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_carries_ids_labels_and_time():
    """The result keeps ids and labels and records a non-negative compute time."""
    emb = random_embedding(n=6, d=3)
    emb.labels = ["a", "a", "b", "b", "c", None]
    K = kernel_matrix(emb, KernelParams())
    assert K.ids == emb.ids
    assert K.labels == emb.labels
    assert K.compute_seconds >= 0.0
    assert K.n == 6


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_chi2_negative_names_row_and_feature():
    """Negative input under chi-squared names the row id and feature index."""
    emb = random_embedding(n=5, d=4)
    emb.rows[3, 2] = -0.5
    with pytest.raises(KernelError, match=r"row 3 \(r3\), feature index 2"):
        kernel_matrix(emb, KernelParams(kind="chi2"))


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_cosine_zero_row():
    """A zero row cannot be cosine-normalised."""
    emb = random_embedding(n=5, d=4)
    emb.rows[1] = 0.0
    with pytest.raises(KernelError, match="row 1"):
        kernel_matrix(emb, KernelParams(kind="cosine"))


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_non_finite_names_pair():
    """Overflow to infinity is reported with the (i, j) position."""
    emb = EmbeddingMatrix(np.array([[1e200, 1.0], [1e200, 1.0]]), ["a", "b"], ["x", "y"])
    with pytest.raises(KernelError, match=r"non-finite kernel value at \(0, 0\)"):
        kernel_matrix(emb, KernelParams(kind="polynomial", d=3))


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_needs_two_rows():
    """A single row has no kernel matrix."""
    emb = random_embedding(n=1, d=3)
    with pytest.raises(KernelError, match="at least 2 rows"):
        kernel_matrix(emb, KernelParams())


# ------------------------------------------------------------------------------------------


def test_kernel_matrix_shape_validation():
    """KernelMatrix refuses values that do not match its ids."""
    with pytest.raises(KernelError):
        KernelMatrix(np.zeros((2, 3)), ["a", "b"])


# ==========================================================================================
# ==========================================================================================
# eof
