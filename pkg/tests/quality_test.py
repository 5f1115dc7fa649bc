import json
import logging

import numpy as np
import pytest

from kernseq.exceptions import QualityError
from kernseq.quality import (
    CH_SENTINEL,
    QualityReport,
    auc_rnx,
    calinski_harabasz,
    cluster_report,
    davies_bouldin,
    elbow_curve,
    elbow_from_curve,
    elbow_select,
    evaluate_embedding,
    kmeans,
    knn_table,
    knn_table_from_distances,
    q_curve,
    q_of_k,
    r_of_k,
    silhouette,
)

# ==========================================================================================
# ==========================================================================================
# File:    quality_test.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file contains unit tests for the neighbourhood preservation curve,
#          AUC_RNX, k-means, elbow selection and the clustering indices in quality.py
# ==========================================================================================
# ==========================================================================================
# Brute-force oracles


def naive_silhouette(X: np.ndarray, labels: np.ndarray) -> float:
    n = X.shape[0]
    scores = []
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            scores.append(0.0)
            continue
        a = np.mean([np.linalg.norm(X[i] - X[j]) for j in same])
        b = min(
            np.mean([np.linalg.norm(X[i] - X[j]) for j in range(n) if labels[j] == c])
            for c in set(labels.tolist())
            if c != labels[i]
        )
        scores.append((b - a) / max(a, b))
    return float(np.mean(scores))


# ------------------------------------------------------------------------------------------


def naive_calinski_harabasz(X: np.ndarray, labels: np.ndarray) -> float:
    n = X.shape[0]
    clusters = sorted(set(labels.tolist()))
    k = len(clusters)
    mean = X.mean(axis=0)
    between = within = 0.0
    for c in clusters:
        members = X[labels == c]
        centroid = members.mean(axis=0)
        between += len(members) * float(((centroid - mean) ** 2).sum())
        within += float(((members - centroid) ** 2).sum())
    return (between / (k - 1)) / (within / (n - k))


# ------------------------------------------------------------------------------------------


def naive_davies_bouldin(X: np.ndarray, labels: np.ndarray) -> float:
    clusters = sorted(set(labels.tolist()))
    cents = [X[labels == c].mean(axis=0) for c in clusters]
    spread = [np.mean([np.linalg.norm(x - cents[i]) for x in X[labels == c]]) for i, c in enumerate(clusters)]
    worst = []
    for i in range(len(clusters)):
        worst.append(
            max(
                (spread[i] + spread[j]) / np.linalg.norm(cents[i] - cents[j])
                for j in range(len(clusters))
                if j != i
            )
        )
    return float(np.mean(worst))


# ==========================================================================================
# ==========================================================================================
# Neighbour tables and Q(k)


def test_knn_table_breaks_ties_by_lower_index():
    """Equal distances order neighbours by index and exclude self."""
    D = np.array(
        [
            [0.0, 1.0, 1.0, 2.0],
            [1.0, 0.0, 3.0, 3.0],
            [1.0, 3.0, 0.0, 1.0],
            [2.0, 3.0, 1.0, 0.0],
        ]
    )
    table = knn_table_from_distances(D, 3)
    assert table.tolist() == [[1, 2, 3], [0, 2, 3], [0, 3, 1], [2, 0, 1]]


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("k_max", [0, 4], ids=["zero", "n"])
def test_knn_table_k_range(k_max):
    """k_max must lie in 1..n-1."""
    with pytest.raises(QualityError):
        knn_table_from_distances(np.ones((4, 4)), k_max)


# ------------------------------------------------------------------------------------------


def test_q_curve_matches_per_k_overlap():
    """The one-pass curve equals the direct overlap count at every k."""
    rng = np.random.default_rng(0)
    hd = knn_table(rng.standard_normal((40, 6)), 15)
    ld = knn_table(rng.standard_normal((40, 2)), 15)
    curve = q_curve(hd, ld)
    for k in range(1, 16):
        assert curve[k - 1] == pytest.approx(q_of_k(hd, ld, k))


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize("n", [10, 100, 1000], ids=["n10", "n100", "n1000"])
@pytest.mark.parametrize("k", [1, 5, 50], ids=["k1", "k5", "k50"])
def test_r_of_k_zero_at_chance_level(n, k):
    """R(k) is exactly zero when Q(k) equals the random expectation k / (n - 1)."""
    if k > n - 2:
        pytest.skip("k outside 1..n-2")
    assert r_of_k(k / (n - 1), n, k) == pytest.approx(0.0, abs=1e-12)
    assert r_of_k(1.0, n, k) == pytest.approx(1.0)


# ------------------------------------------------------------------------------------------


def test_r_of_k_domain():
    """R(k) is undefined at k = n - 1."""
    with pytest.raises(QualityError):
        r_of_k(1.0, 10, 9)


# ------------------------------------------------------------------------------------------


def test_auc_rnx_weights_by_inverse_k():
    """AUC_RNX is the 1/k weighted mean of R(k)."""
    assert auc_rnx([1.0, 0.0]) == pytest.approx(1.0 / 1.5)
    assert auc_rnx([0.5, 0.5, 0.5]) == pytest.approx(0.5)
    with pytest.raises(QualityError):
        auc_rnx([])


# ==========================================================================================
# ==========================================================================================
# Embedding evaluation


def test_identical_spaces_score_one():
    """Evaluating a space against itself gives Q = R = AUC_RNX = 1."""
    X = np.random.default_rng(1).standard_normal((50, 3))
    curve = evaluate_embedding(X, X, 20)
    assert curve.k_max == 20
    np.testing.assert_allclose(curve.q_values, 1.0)
    assert curve.auc_rnx == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------------------------------------


def test_random_embedding_scores_near_zero():
    """A random low dimensional layout has AUC_RNX within three standard errors of 0."""
    rng = np.random.default_rng(2)
    scores = []
    for _ in range(50):
        X = rng.standard_normal((200, 10))
        Y = rng.standard_normal((200, 2))
        scores.append(evaluate_embedding(X, Y).auc_rnx)
    mean = float(np.mean(scores))
    se = float(np.std(scores, ddof=1) / np.sqrt(len(scores)))
    assert abs(mean) <= 3 * se + 1e-12


# ------------------------------------------------------------------------------------------


def test_evaluate_embedding_clamps_k_max(caplog: pytest.LogCaptureFixture):
    """k_max above n - 2 is clamped with a warning."""
    X = np.random.default_rng(3).standard_normal((12, 3))
    with caplog.at_level(logging.WARNING, logger="kernseq.quality"):
        curve = evaluate_embedding(X, X[:, :2])
    assert curve.k_max == 10
    assert "clamped" in caplog.text


# ------------------------------------------------------------------------------------------


def test_evaluate_embedding_with_precomputed_distances():
    """Precomputed high dimensional distances replace the feature rows."""
    X = np.random.default_rng(4).standard_normal((15, 4))
    D = np.sqrt(((X[:, None] - X[None, :]) ** 2).sum(axis=2))
    direct = evaluate_embedding(X, X[:, :2], 5)
    via_d = evaluate_embedding(None, X[:, :2], 5, hd_distances=D)
    np.testing.assert_allclose(direct.q_values, via_d.q_values)


# ------------------------------------------------------------------------------------------


def test_evaluate_embedding_errors():
    """Too few points or mismatched row counts are refused."""
    with pytest.raises(QualityError, match="at least 3"):
        evaluate_embedding(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(QualityError, match="rows"):
        evaluate_embedding(np.zeros((5, 2)), np.zeros((6, 2)))


# ==========================================================================================
# ==========================================================================================
# k-means and elbow selection


def test_kmeans_reproducible_and_monotone(blobs):
    """Equal seeds give equal results; inertia never increases across steps."""
    X, _ = blobs(25, 3, 4, seed=5)
    a = kmeans(X, 3, seed=1)
    b = kmeans(X, 3, seed=1)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert a.inertia == b.inertia
    assert all(x >= y - 1e-9 for x, y in zip(a.inertia_trace, a.inertia_trace[1:], strict=False))
    assert a.centroids.shape == (3, 4)
    assert a.iterations >= 1


# ------------------------------------------------------------------------------------------


def test_kmeans_k_range():
    """k must lie in 1..n."""
    with pytest.raises(QualityError):
        kmeans(np.zeros((3, 2)), 4)


# ------------------------------------------------------------------------------------------


def test_elbow_from_curve_edge_cases():
    """Flat or straight curves pick the second candidate; short curves are refused."""
    assert elbow_from_curve([(2, 5.0), (3, 5.0), (4, 5.0)]) == 3
    assert elbow_from_curve([(2, 3.0), (3, 2.0), (4, 1.0)]) == 3
    assert elbow_from_curve([(1, 100.0), (2, 20.0), (3, 15.0), (4, 12.0), (5, 10.0)]) == 2
    with pytest.raises(QualityError, match="at least 3"):
        elbow_from_curve([(2, 1.0), (3, 0.5)])


# ------------------------------------------------------------------------------------------


def test_elbow_finds_five_blobs(blobs):
    """Five well separated blobs give an elbow of 5 +/- 1 on most seeds."""
    hits = 0
    for seed in range(5):
        X, _ = blobs(30, 5, 5, separation=10.0, spread=1.0, seed=seed)
        if abs(elbow_select(X, seed=seed) - 5) <= 1:
            hits += 1
    assert hits >= 4


# ------------------------------------------------------------------------------------------


def test_elbow_curve_candidate_limit():
    """Candidates above n are refused."""
    with pytest.raises(QualityError):
        elbow_curve(np.zeros((4, 2)), [2, 5])


# ==========================================================================================
# ==========================================================================================
# Validation indices


def test_indices_match_brute_force_oracles():
    """silhouette, Calinski-Harabasz and Davies-Bouldin equal naive implementations."""
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = int(rng.integers(10, 101))
        k = int(rng.integers(2, 6))
        X = rng.standard_normal((n, 3))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        assert silhouette(X, labels) == pytest.approx(naive_silhouette(X, labels), abs=1e-9)
        assert calinski_harabasz(X, labels) == pytest.approx(naive_calinski_harabasz(X, labels), rel=1e-9)
        assert davies_bouldin(X, labels) == pytest.approx(naive_davies_bouldin(X, labels), rel=1e-9)


# ------------------------------------------------------------------------------------------


def test_two_far_blobs_have_high_silhouette(blobs):
    """Separation far beyond the spread gives silhouette above 0.9."""
    X, y = blobs(30, 2, 2, separation=30.0, spread=1.0, seed=7)
    assert silhouette(X, y) > 0.9


# ------------------------------------------------------------------------------------------


def test_silhouette_all_singletons_is_zero():
    """Every point in its own cluster scores 0."""
    assert silhouette(np.arange(8.0).reshape(4, 2), [0, 1, 2, 3]) == 0.0


# ------------------------------------------------------------------------------------------


def test_calinski_harabasz_zero_dispersion(caplog: pytest.LogCaptureFixture):
    """Zero within-cluster dispersion returns the sentinel with a warning."""
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    with caplog.at_level(logging.WARNING, logger="kernseq.quality"):
        assert calinski_harabasz(X, [0, 0, 1, 1]) == CH_SENTINEL
    assert "zero" in caplog.text


# ------------------------------------------------------------------------------------------


def test_davies_bouldin_coincident_centroids():
    """Clusters sharing a centroid are named in the error."""
    X = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
    with pytest.raises(QualityError, match="Clusters 0 and 1"):
        davies_bouldin(X, [0, 0, 1, 1])


# ------------------------------------------------------------------------------------------


def test_indices_need_two_clusters():
    """A single cluster cannot be scored."""
    for fn in (silhouette, calinski_harabasz, davies_bouldin):
        with pytest.raises(QualityError, match="at least 2 clusters"):
            fn(np.zeros((4, 2)), [0, 0, 0, 0])


# ==========================================================================================
# ==========================================================================================
# Reports


def test_cluster_report_auto_and_fixed(blobs):
    """Auto selection runs the elbow; a fixed k is used as given."""
    X, _ = blobs(20, 3, 2, separation=15.0, seed=8)
    auto = cluster_report(X, "auto", seed=0, k_range=range(2, 9))
    assert [k for k, _ in auto.elbow] == list(range(2, 9))
    assert 2 <= auto.k_clusters <= 8
    fixed = cluster_report(X, 3, seed=0)
    assert fixed.k_clusters == 3 and fixed.elbow == []
    assert fixed.silhouette > 0.5
    assert fixed.runtime_seconds >= 0.0
    with pytest.raises(QualityError, match="2 <= k < n"):
        cluster_report(X, 60)


# ------------------------------------------------------------------------------------------


def test_quality_report_json_schema(blobs):
    """The report serialises to the documented JSON keys."""
    X, _ = blobs(10, 2, 3, seed=9)
    report = QualityReport(evaluate_embedding(X, X[:, :2], 5), cluster_report(X[:, :2], 2))
    payload = json.loads(json.dumps(report.to_dict()))
    assert set(payload) == {"auc_rnx", "q_curve", "r_curve", "k_max", "clustering"}
    assert payload["k_max"] == 5
    assert len(payload["q_curve"]) == len(payload["r_curve"]) == 5
    assert set(payload["clustering"]) >= {
        "k",
        "silhouette",
        "calinski_harabasz",
        "davies_bouldin",
        "inertia",
        "runtime_seconds",
    }
    assert QualityReport(evaluate_embedding(X, X, 3)).to_dict()["clustering"] is None


# ==========================================================================================
# ==========================================================================================
# eof
