import logging
import time
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score, silhouette_score

from kernseq.exceptions import QualityError

# ==========================================================================================
# ==========================================================================================

# File:    quality.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Embedding quality measures: k-ary neighbourhood agreement, its rescaled form
#          and area under the curve, plus k-means clustering with elbow selection and
#          the silhouette, Calinski-Harabasz and Davies-Bouldin indices
# ==========================================================================================
# ==========================================================================================
# Domain types

DEFAULT_K_MAX = 99
DEFAULT_K_RANGE: tuple[int, ...] = tuple(range(2, 15))
CH_SENTINEL = 1e18

FloatMatrix = npt.NDArray[np.float64]
IndexTable = npt.NDArray[np.int64]


@dataclass
class NeighborhoodCurve:
    """Q(k), R(k) for ``k = 1..k_max`` and their harmonic-weighted summary."""

    ks: npt.NDArray[np.int64]
    q_values: npt.NDArray[np.float64]
    r_values: npt.NDArray[np.float64]
    auc_rnx: float

    @property
    def k_max(self) -> int:
        return int(self.ks[-1]) if len(self.ks) else 0


# ------------------------------------------------------------------------------------------


@dataclass
class KMeansResult:
    """
    Outcome of one k-means run.

    Attributes:
        assignments: Cluster index per point.
        centroids: Final centroids, shape ``(k, d)``.
        inertia: Sum of squared distances to the assigned centroid.
        inertia_trace: Inertia after each assignment step.
        iterations: Lloyd iterations performed.
        runtime_seconds: Wall time.
    """

    assignments: npt.NDArray[np.int64]
    centroids: FloatMatrix
    inertia: float
    inertia_trace: list[float]
    iterations: int
    runtime_seconds: float


# ------------------------------------------------------------------------------------------


@dataclass
class ClusteringReport:
    """k-means assignments and the internal validation indices computed on them."""

    k_clusters: int
    assignments: npt.NDArray[np.int64]
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float
    inertia: float
    runtime_seconds: float
    ch_degenerate: bool = False
    elbow: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k_clusters,
            "silhouette": self.silhouette,
            "calinski_harabasz": self.calinski_harabasz,
            "davies_bouldin": self.davies_bouldin,
            "inertia": self.inertia,
            "runtime_seconds": self.runtime_seconds,
            "ch_degenerate": self.ch_degenerate,
        }


# ------------------------------------------------------------------------------------------


@dataclass
class QualityReport:
    """Neighbourhood curve plus an optional clustering summary, as written to JSON."""

    curve: NeighborhoodCurve
    clustering: ClusteringReport | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "auc_rnx": self.curve.auc_rnx,
            "q_curve": [float(q) for q in self.curve.q_values],
            "r_curve": [float(r) for r in self.curve.r_values],
            "k_max": self.curve.k_max,
            "clustering": self.clustering.to_dict() if self.clustering else None,
        }


# ==========================================================================================
# ==========================================================================================
# Neighbourhood preservation


def knn_table_from_distances(D: FloatMatrix, k_max: int) -> IndexTable:
    """
    Nearest-neighbour table from a square distance matrix.

    Self is excluded and equal distances are ordered by the lower index.

    Raises:
        QualityError: ``k_max`` outside ``1..n-1``.
    """
    D = np.array(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise QualityError(f"Distance matrix must be square, got shape {D.shape}")
    if not 1 <= k_max <= n - 1:
        raise QualityError(f"k_max={k_max} must be between 1 and n-1={n - 1}")
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k_max].astype(np.int64)


# ------------------------------------------------------------------------------------------


def knn_table(X: FloatMatrix, k_max: int, metric: str = "euclidean") -> IndexTable:
    """Nearest-neighbour table of the rows of ``X``; see :func:`knn_table_from_distances`."""
    if metric != "euclidean":
        raise QualityError(f"Unsupported neighbour metric '{metric}'")
    X = np.asarray(X, dtype=np.float64)
    if k_max >= X.shape[0]:
        raise QualityError(f"k_max={k_max} must be below n={X.shape[0]}")
    return knn_table_from_distances(cdist(X, X, "euclidean"), k_max)


# ------------------------------------------------------------------------------------------


def q_of_k(hd_table: IndexTable, ld_table: IndexTable, k: int) -> float:
    """Mean fraction of shared members between the first ``k`` entries of each row."""
    if hd_table.shape[0] != ld_table.shape[0]:
        raise QualityError("Neighbour tables cover different numbers of points")
    width = min(hd_table.shape[1], ld_table.shape[1])
    if not 1 <= k <= width:
        raise QualityError(f"k={k} exceeds neighbour table width {width}")
    n = hd_table.shape[0]
    rows = np.arange(n)[:, None]
    member = np.zeros((n, n), dtype=bool)
    member[rows, hd_table[:, :k]] = True
    return float(member[rows, ld_table[:, :k]].sum() / (n * k))


# ------------------------------------------------------------------------------------------


def q_curve(hd_table: IndexTable, ld_table: IndexTable) -> npt.NDArray[np.float64]:
    """
    ``Q(k)`` for every ``k`` up to the table width in one pass.

    A neighbour at rank ``r`` in one table and ``s`` in the other is shared by the first
    ``k`` entries of both exactly when ``max(r, s) < k``.
    """
    n, width = hd_table.shape
    if ld_table.shape != hd_table.shape:
        raise QualityError(f"Neighbour tables differ in shape: {hd_table.shape} vs {ld_table.shape}")
    rows = np.arange(n)[:, None]
    hd_rank = np.full((n, n), width, dtype=np.int64)
    hd_rank[rows, hd_table] = np.arange(width)
    shared_at = np.maximum(hd_rank[rows, ld_table], np.arange(width)[None, :])
    counts = np.cumsum(np.bincount(shared_at.ravel(), minlength=width + 1)[:width])
    ks = np.arange(1, width + 1)
    return counts / (n * ks)


# ------------------------------------------------------------------------------------------


def r_of_k(q: float, n: int, k: int) -> float:
    """``((n - 1) q - k) / (n - 1 - k)``; zero for a random embedding, one for a perfect one."""
    if not 1 <= k <= n - 2:
        raise QualityError(f"R(k) is defined for 1 <= k <= n-2; got k={k}, n={n}")
    return ((n - 1) * q - k) / (n - 1 - k)


# ------------------------------------------------------------------------------------------


def auc_rnx(curve: NeighborhoodCurve | Iterable[float]) -> float:
    """``sum_k R(k)/k / sum_k 1/k``."""
    r = np.asarray(curve.r_values if isinstance(curve, NeighborhoodCurve) else list(curve), dtype=np.float64)
    if r.size == 0:
        raise QualityError("AUC_RNX of an empty curve")
    w = 1.0 / np.arange(1, r.size + 1)
    return float((r * w).sum() / w.sum())


# ------------------------------------------------------------------------------------------


def evaluate_embedding(
    X_hd: FloatMatrix | None,
    Y_ld: FloatMatrix,
    k_max: int = DEFAULT_K_MAX,
    hd_distances: FloatMatrix | None = None,
) -> NeighborhoodCurve:
    """
    Compare neighbourhoods of the high and low dimensional spaces.

    Args:
        X_hd: High dimensional rows; ignored when ``hd_distances`` is given.
        Y_ld: Low dimensional coordinates with the same row order.
        k_max: Largest neighbourhood size; clamped to ``n - 2`` with a warning.
        hd_distances: Optional precomputed high dimensional distance matrix, such as
            kernel-induced distances.

    Returns:
        Q and R for every k plus AUC_RNX.
    """
    logger = logging.getLogger("kernseq.quality")
    Y_ld = np.asarray(Y_ld, dtype=np.float64)
    n = Y_ld.shape[0]
    if n < 3:
        raise QualityError(f"Neighbourhood evaluation needs at least 3 points, got {n}")
    hd_n = hd_distances.shape[0] if hd_distances is not None else np.asarray(X_hd).shape[0]
    if hd_n != n:
        raise QualityError(f"High dimensional data has {hd_n} rows, low dimensional has {n}")
    if k_max > n - 2:
        logger.warning("k_max=%d clamped to n-2=%d", k_max, n - 2)
        k_max = n - 2
    if k_max < 1:
        raise QualityError(f"k_max must be >= 1, got {k_max}")

    if hd_distances is not None:
        hd = knn_table_from_distances(hd_distances, k_max)
    else:
        hd = knn_table(np.asarray(X_hd, dtype=np.float64), k_max)
    ld = knn_table(Y_ld, k_max)
    q = q_curve(hd, ld)
    ks = np.arange(1, k_max + 1)
    r = np.array([r_of_k(float(qk), n, int(k)) for qk, k in zip(q, ks, strict=True)])
    auc = auc_rnx(r)
    logger.info("AUC_RNX %.4f over k=1..%d", auc, k_max)
    return NeighborhoodCurve(ks, q, r, auc)


# ==========================================================================================
# ==========================================================================================
# Clustering


def kmeans(X: FloatMatrix, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6) -> KMeansResult:
    """
    Lloyd's k-means with k-means++ seeding.

    An empty cluster takes the point farthest from its current centroid.  Iteration stops
    once the total centroid shift falls below ``tol`` or after ``max_iter`` steps.

    Raises:
        QualityError: ``k`` outside ``1..n``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise QualityError(f"k={k} must be between 1 and n={n}")

    t0 = time.perf_counter()
    C, _ = kmeans_plusplus(X, n_clusters=k, random_state=seed)
    C = np.asarray(C, dtype=np.float64)
    trace: list[float] = []
    rows = np.arange(n)
    it = 0
    for it in range(1, max_iter + 1):
        D = cdist(X, C, "sqeuclidean")
        labels = D.argmin(axis=1)
        trace.append(float(D[rows, labels].sum()))
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            far = int(np.argmax(D[rows, labels]))
            labels[far] = empty
            D[far, :] = 0.0
        new_C = np.vstack([X[labels == c].mean(axis=0) if np.any(labels == c) else C[c] for c in range(k)])
        shift = float(np.linalg.norm(new_C - C))
        C = new_C
        if shift < tol:
            break

    D = cdist(X, C, "sqeuclidean")
    labels = D.argmin(axis=1).astype(np.int64)
    inertia = float(D[rows, labels].sum())
    return KMeansResult(labels, C, inertia, trace, it, time.perf_counter() - t0)


# ------------------------------------------------------------------------------------------


def elbow_curve(
    X: FloatMatrix, k_range: Iterable[int] = DEFAULT_K_RANGE, seed: int = 0
) -> list[tuple[int, float]]:
    """Inertia of a k-means run for each candidate ``k``."""
    X = np.asarray(X, dtype=np.float64)
    ks = sorted(set(k_range))
    if ks and ks[-1] > X.shape[0]:
        raise QualityError(f"Largest candidate k={ks[-1]} exceeds n={X.shape[0]}")
    return [(k, kmeans(X, k, seed).inertia) for k in ks]


# ------------------------------------------------------------------------------------------


def elbow_from_curve(curve: list[tuple[int, float]]) -> int:
    """
    Elbow of an inertia curve: the point farthest from the chord between its endpoints
    after scaling both axes to ``[0, 1]``.  A curve with no bend (every point on the
    chord) selects the candidate next to the first endpoint.
    """
    if len(curve) < 3:
        raise QualityError(f"Elbow selection needs at least 3 candidate k values, got {len(curve)}")
    ks = np.array([k for k, _ in curve], dtype=np.float64)
    inertia = np.array([v for _, v in curve], dtype=np.float64)
    span = inertia.max() - inertia.min()
    if span == 0:
        return int(ks[1])
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    y = (inertia - inertia.min()) / span
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dist = np.abs(dx * (y - y[0]) - dy * (x - x[0])) / np.hypot(dx, dy)
    if dist.max() <= 1e-12:
        return int(ks[1])
    return int(ks[int(np.argmax(dist))])


# ------------------------------------------------------------------------------------------


def elbow_select(X: FloatMatrix, k_range: Iterable[int] = DEFAULT_K_RANGE, seed: int = 0) -> int:
    """Run :func:`elbow_curve` and return its elbow."""
    curve = elbow_curve(X, k_range, seed)
    k = elbow_from_curve(curve)
    logging.getLogger("kernseq.quality").info("Elbow selected k=%d", k)
    return k


# ==========================================================================================
# ==========================================================================================
# Validation indices


def _cluster_count(
    X: FloatMatrix, assignments: npt.ArrayLike, name: str
) -> tuple[FloatMatrix, npt.NDArray[Any]]:
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(assignments)
    if labels.shape[0] != X.shape[0]:
        raise QualityError(f"{name}: {labels.shape[0]} assignments for {X.shape[0]} points")
    k = np.unique(labels).size
    if k < 2:
        raise QualityError(f"{name} needs at least 2 clusters, got {k}")
    return X, labels


# ------------------------------------------------------------------------------------------


def silhouette(X: FloatMatrix, assignments: npt.ArrayLike) -> float:
    """
    Mean silhouette coefficient.  Points in singleton clusters score 0, so an all
    singleton clustering scores 0.
    """
    X, labels = _cluster_count(X, assignments, "silhouette")
    if np.unique(labels).size == X.shape[0]:
        return 0.0
    return float(silhouette_score(X, labels, metric="euclidean"))


# ------------------------------------------------------------------------------------------


def calinski_harabasz(X: FloatMatrix, assignments: npt.ArrayLike) -> float:
    """
    Calinski-Harabasz index.  Zero within-cluster dispersion returns :data:`CH_SENTINEL`
    with a warning instead of infinity.
    """
    X, labels = _cluster_count(X, assignments, "calinski_harabasz")
    uniq = np.unique(labels)
    if uniq.size >= X.shape[0]:
        raise QualityError(f"calinski_harabasz needs k < n, got k={uniq.size}, n={X.shape[0]}")
    within = sum(float(((X[labels == c] - X[labels == c].mean(axis=0)) ** 2).sum()) for c in uniq)
    if within == 0:
        logging.getLogger("kernseq.quality").warning(
            "Within-cluster dispersion is zero; Calinski-Harabasz set to %g", CH_SENTINEL
        )
        return CH_SENTINEL
    return float(calinski_harabasz_score(X, labels))


# ------------------------------------------------------------------------------------------


def davies_bouldin(X: FloatMatrix, assignments: npt.ArrayLike) -> float:
    """
    Davies-Bouldin index; lower is better.

    Raises:
        QualityError: Two clusters share a centroid; the message names both.
    """
    X, labels = _cluster_count(X, assignments, "davies_bouldin")
    uniq = np.unique(labels)
    if uniq.size >= X.shape[0]:
        raise QualityError(f"davies_bouldin needs k < n, got k={uniq.size}, n={X.shape[0]}")
    centroids = np.vstack([X[labels == c].mean(axis=0) for c in uniq])
    D = cdist(centroids, centroids)
    np.fill_diagonal(D, np.inf)
    coincident = np.argwhere(D == 0)
    if coincident.size:
        i, j = coincident[0]
        raise QualityError(f"Clusters {uniq[i]} and {uniq[j]} have coincident centroids")
    return float(davies_bouldin_score(X, labels))


# ------------------------------------------------------------------------------------------


def cluster_report(
    X: FloatMatrix,
    k: int | str = "auto",
    seed: int = 0,
    k_range: Iterable[int] = DEFAULT_K_RANGE,
) -> ClusteringReport:
    """
    Cluster ``X`` with k-means and score the result.

    Args:
        X: Points to cluster, typically t-SNE coordinates.
        k: Cluster count, or ``"auto"`` to choose it with the elbow rule.
        seed: Seed for k-means++.
        k_range: Elbow candidates; values of ``n`` or more are dropped.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    t0 = time.perf_counter()
    elbow: list[tuple[int, float]] = []
    if k == "auto":
        elbow = elbow_curve(X, [c for c in k_range if c < n], seed)
        k_clusters = elbow_from_curve(elbow)
    else:
        k_clusters = int(k)
    if not 2 <= k_clusters < n:
        raise QualityError(f"Cluster count must satisfy 2 <= k < n={n}, got {k_clusters}")

    km = kmeans(X, k_clusters, seed)
    ch = calinski_harabasz(X, km.assignments)
    report = ClusteringReport(
        k_clusters=k_clusters,
        assignments=km.assignments,
        silhouette=silhouette(X, km.assignments),
        calinski_harabasz=ch,
        davies_bouldin=davies_bouldin(X, km.assignments),
        inertia=km.inertia,
        runtime_seconds=time.perf_counter() - t0,
        ch_degenerate=ch == CH_SENTINEL,
        elbow=elbow,
    )
    logging.getLogger("kernseq.quality").info(
        "k=%d silhouette %.3f CH %.3f DB %.3f", k_clusters, report.silhouette, ch, report.davies_bouldin
    )
    return report


# ==========================================================================================
# ==========================================================================================
# eof
