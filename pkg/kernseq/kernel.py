import dataclasses
import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import cdist, pdist

from kernseq.embed import EmbeddingMatrix
from kernseq.exceptions import ConfigError, KernelError

# ==========================================================================================
# ==========================================================================================

# File:    kernel.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Pairwise kernel functions and blocked n x n kernel matrix construction for the
#          cosine, linear, polynomial, Gaussian, isolation, Laplacian, sigmoid,
#          chi-squared and additive chi-squared kernels
# ==========================================================================================
# ==========================================================================================
# Domain types

KINDS: tuple[str, ...] = (
    "cosine",
    "linear",
    "polynomial",
    "gaussian",
    "isolation",
    "laplacian",
    "sigmoid",
    "chi2",
    "additive_chi2",
)

# Kinds whose matrices have a unit diagonal and entries in [0, 1] (cosine: [-1, 1])
UNIT_DIAGONAL: frozenset[str] = frozenset({"cosine", "gaussian", "laplacian", "chi2", "isolation"})
NONNEGATIVE_INPUT: frozenset[str] = frozenset({"chi2", "additive_chi2"})

BLOCK_ROWS = 128

FloatVector = npt.NDArray[np.float64]
FloatMatrix = npt.NDArray[np.float64]


@dataclass(frozen=True)
class KernelParams:
    """
    Kernel kind and its parameters.  Only the fields relevant to ``kind`` are read.

    Attributes:
        kind: One of :data:`KINDS`.
        c: Linear kernel offset.
        r: Polynomial coefficient.
        d: Polynomial degree, ``>= 1``.
        sigma: Gaussian / Laplacian width.  ``None`` selects the median heuristic.
        gamma: Sigmoid slope or chi-squared scale.  ``None`` selects ``1/d_features`` for
            sigmoid and ``1.0`` for chi-squared.
        c0: Sigmoid intercept.
        psi: Reference points per isolation partitioning, ``>= 2``.
        t_trees: Number of isolation partitionings, ``>= 1``.
        seed: Seed for isolation sampling and the median heuristic pair sample.
        sigma_sample_pairs: Pairs sampled by the median heuristic.
    """

    kind: str = "cosine"
    c: float = 0.0
    r: float = 1.0
    d: int = 3
    sigma: float | None = None
    gamma: float | None = None
    c0: float = 0.0
    psi: int = 16
    t_trees: int = 200
    seed: int = 0
    sigma_sample_pairs: int = 1000

    def __post_init__(self) -> None:
        kind = self.kind.replace("-", "_").lower()
        if kind not in KINDS:
            raise ConfigError(f"Unknown kernel kind '{self.kind}'; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if kind == "chi2" and self.gamma is not None and self.gamma <= 0:
            raise ConfigError(f"chi2 gamma must be positive, got {self.gamma}")
        if self.d < 1:
            raise ConfigError(f"polynomial degree must be >= 1, got {self.d}")
        if self.psi < 2:
            raise ConfigError(f"psi must be >= 2, got {self.psi}")
        if self.t_trees < 1:
            raise ConfigError(f"t_trees must be >= 1, got {self.t_trees}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# ------------------------------------------------------------------------------------------


@dataclass
class KernelMatrix:
    """
    Symmetric n x n similarity matrix.

    Attributes:
        values: The matrix.
        ids: Row/column ids.
        params: Resolved parameters that generated the matrix, when known.
        compute_seconds: Wall time of the numeric computation only.
        labels: Optional class label per row, carried over from the embedding.
    """

    values: FloatMatrix
    ids: list[str]
    params: KernelParams | None = None
    compute_seconds: float = 0.0
    labels: list[str | None] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise KernelError(f"Kernel values of shape {self.values.shape} do not match {n} ids")
        if not self.labels:
            self.labels = [None] * n

    @property
    def n(self) -> int:
        return len(self.ids)


# ------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class IsolationModel:
    """
    Random Voronoi partitionings of the fitted data.

    Each partitioning is a sorted set of ``psi`` distinct row indices into ``data``; a point
    belongs to the cell of its nearest reference point under squared Euclidean distance,
    the lowest reference index winning ties.
    """

    partitionings: npt.NDArray[np.int64]
    data: FloatMatrix
    seed: int
    metric: str = "sqeuclidean"

    @property
    def psi(self) -> int:
        return int(self.partitionings.shape[1])

    @property
    def t_trees(self) -> int:
        return int(self.partitionings.shape[0])

    def cells(self, X: FloatMatrix) -> npt.NDArray[np.int64]:
        """Cell index of every row of ``X`` in every partitioning, shape ``(n, t_trees)``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.data.shape[1]:
            raise KernelError(f"Isolation model has dimension {self.data.shape[1]}, input has {X.shape[1]}")
        out = np.empty((X.shape[0], self.t_trees), dtype=np.int64)
        for t, refs in enumerate(self.partitionings):
            out[:, t] = cdist(X, self.data[refs], self.metric).argmin(axis=1)
        return out


# ==========================================================================================
# ==========================================================================================
# Pairwise kernels


def _as_pair(x: npt.ArrayLike, y: npt.ArrayLike) -> tuple[FloatVector, FloatVector]:
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.shape != yv.shape:
        raise KernelError(f"Dimension mismatch: {xv.size} vs {yv.size}")
    return xv, yv


# ------------------------------------------------------------------------------------------


def _check_sigma(sigma: float) -> None:
    if sigma <= 0:
        raise KernelError(f"sigma must be positive, got {sigma}")


# ------------------------------------------------------------------------------------------


def _check_nonnegative(x: FloatVector, name: str) -> None:
    neg = np.flatnonzero(x < 0)
    if neg.size:
        raise KernelError(f"Negative entry {x[neg[0]]} at index {neg[0]} of {name}")


# ------------------------------------------------------------------------------------------


def cosine(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """L2-normalised dot product; raises on a zero-norm vector."""
    xv, yv = _as_pair(x, y)
    nx, ny = np.linalg.norm(xv), np.linalg.norm(yv)
    if nx == 0 or ny == 0:
        raise KernelError("Cosine similarity is undefined for a zero-norm vector")
    return float(np.clip(xv @ yv / (nx * ny), -1.0, 1.0))


# ------------------------------------------------------------------------------------------


def linear(x: npt.ArrayLike, y: npt.ArrayLike, c: float = 0.0) -> float:
    """Dot product plus offset ``c``."""
    xv, yv = _as_pair(x, y)
    return float(xv @ yv + c)


# ------------------------------------------------------------------------------------------


def polynomial(x: npt.ArrayLike, y: npt.ArrayLike, r: float = 1.0, d: int = 3) -> float:
    """``(x.y + r) ** d``."""
    xv, yv = _as_pair(x, y)
    if d < 1:
        raise KernelError(f"polynomial degree must be >= 1, got {d}")
    return float((xv @ yv + r) ** d)


# ------------------------------------------------------------------------------------------


def gaussian(x: npt.ArrayLike, y: npt.ArrayLike, sigma: float) -> float:
    """``exp(-||x - y||^2 / (2 sigma^2))``."""
    xv, yv = _as_pair(x, y)
    _check_sigma(sigma)
    return float(np.exp(-np.sum((xv - yv) ** 2) / (2.0 * sigma**2)))


# ------------------------------------------------------------------------------------------


def laplacian(x: npt.ArrayLike, y: npt.ArrayLike, sigma: float) -> float:
    """``exp(-||x - y||_1 / (2 sigma^2))``."""
    xv, yv = _as_pair(x, y)
    _check_sigma(sigma)
    return float(np.exp(-np.sum(np.abs(xv - yv)) / (2.0 * sigma**2)))


# ------------------------------------------------------------------------------------------


def sigmoid(x: npt.ArrayLike, y: npt.ArrayLike, gamma: float, c0: float = 0.0) -> float:
    """``tanh(gamma x.y + c0)``."""
    xv, yv = _as_pair(x, y)
    return float(np.tanh(gamma * (xv @ yv) + c0))


# ------------------------------------------------------------------------------------------


def chi2(x: npt.ArrayLike, y: npt.ArrayLike, gamma: float = 1.0) -> float:
    """
    Exponentiated chi-squared kernel.

    Terms with ``x_i + y_i = 0`` contribute nothing.

    Raises:
        KernelError: Negative entry (the error names its index) or ``gamma <= 0``.
    """
    xv, yv = _as_pair(x, y)
    _check_nonnegative(xv, "x")
    _check_nonnegative(yv, "y")
    if gamma <= 0:
        raise KernelError(f"chi2 gamma must be positive, got {gamma}")
    den = xv + yv
    terms = np.divide((xv - yv) ** 2, den, out=np.zeros_like(den), where=den > 0)
    return float(np.exp(-gamma * terms.sum()))


# ------------------------------------------------------------------------------------------


def additive_chi2(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """``sum_i 2 x_i y_i / (x_i + y_i)``, skipping zero denominators."""
    xv, yv = _as_pair(x, y)
    _check_nonnegative(xv, "x")
    _check_nonnegative(yv, "y")
    den = xv + yv
    terms = np.divide(2.0 * xv * yv, den, out=np.zeros_like(den), where=den > 0)
    return float(terms.sum())


# ==========================================================================================
# ==========================================================================================
# Isolation kernel


def isolation_fit(
    data: EmbeddingMatrix | FloatMatrix, psi: int = 16, t_trees: int = 200, seed: int = 0
) -> IsolationModel:
    """
    Sample ``t_trees`` Voronoi partitionings of ``psi`` reference rows each.

    Each partitioning draws ``psi`` distinct row indices without replacement from a
    generator seeded with ``seed``, so equal inputs give identical models.

    Raises:
        KernelError: ``psi`` exceeds the number of rows, or ``t_trees < 1``.
    """
    X = data.rows if isinstance(data, EmbeddingMatrix) else np.asarray(data, dtype=np.float64)
    n = X.shape[0]
    if psi > n:
        raise KernelError(f"psi={psi} exceeds the {n} available rows")
    if psi < 2 or t_trees < 1:
        raise KernelError(f"Isolation kernel needs psi >= 2 and t_trees >= 1, got {psi}, {t_trees}")
    rng = np.random.default_rng(seed)
    parts = np.vstack([np.sort(rng.choice(n, size=psi, replace=False)) for _ in range(t_trees)])
    return IsolationModel(partitionings=parts.astype(np.int64), data=X, seed=seed)


# ------------------------------------------------------------------------------------------


def isolation_value(model: IsolationModel, x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """Fraction of partitionings in which ``x`` and ``y`` share a cell."""
    xv, yv = _as_pair(x, y)
    cells = model.cells(np.vstack([xv, yv]))
    return float(np.mean(cells[0] == cells[1]))


# ==========================================================================================
# ==========================================================================================
# Parameter resolution


def _median_pair_distance(X: FloatMatrix, metric: str, pairs: int, seed: int) -> float:
    n = X.shape[0]
    if n * (n - 1) // 2 <= pairs:
        return float(np.median(pdist(X, metric)))
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=pairs)
    j = rng.integers(0, n - 1, size=pairs)
    j = j + (j >= i)
    diff = X[i] - X[j]
    dist = np.abs(diff).sum(axis=1) if metric == "cityblock" else np.sqrt((diff**2).sum(axis=1))
    return float(np.median(dist))


# ------------------------------------------------------------------------------------------


def resolve_params(params: KernelParams, data: EmbeddingMatrix | FloatMatrix) -> KernelParams:
    """
    Fill data-driven defaults left unset in ``params``.

    - Gaussian / Laplacian ``sigma``: median pairwise Euclidean (Gaussian) or Manhattan
      (Laplacian) distance over a seeded sample of ``sigma_sample_pairs`` pairs; ``1.0``
      when that median is zero.
    - Sigmoid ``gamma``: ``1 / d_features``.
    - Chi-squared ``gamma``: ``1.0``.
    """
    X = data.rows if isinstance(data, EmbeddingMatrix) else np.asarray(data, dtype=np.float64)
    updates: dict[str, Any] = {}
    if params.kind in ("gaussian", "laplacian") and params.sigma is None:
        metric = "euclidean" if params.kind == "gaussian" else "cityblock"
        sigma = _median_pair_distance(X, metric, params.sigma_sample_pairs, params.seed)
        if sigma <= 0:
            logging.getLogger("kernseq.kernel").warning("Median %s distance is zero; using sigma=1.0", metric)
            sigma = 1.0
        updates["sigma"] = sigma
    if params.kind == "sigmoid" and params.gamma is None:
        updates["gamma"] = 1.0 / X.shape[1]
    if params.kind == "chi2" and params.gamma is None:
        updates["gamma"] = 1.0
    return dataclasses.replace(params, **updates) if updates else params


# ==========================================================================================
# ==========================================================================================
# Kernel matrices

BlockFn = Callable[[npt.NDArray[Any], npt.NDArray[Any]], FloatMatrix]


def _chi2_terms(A: FloatMatrix, B: FloatMatrix, additive: bool) -> FloatMatrix:
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    for i, a in enumerate(A):
        den = a + B
        num = 2.0 * a * B if additive else (a - B) ** 2
        out[i] = np.divide(num, den, out=np.zeros_like(den), where=den > 0).sum(axis=1)
    return out


# ------------------------------------------------------------------------------------------


def _isolation_block(A: npt.NDArray[np.int64], B: npt.NDArray[np.int64]) -> FloatMatrix:
    same = np.zeros((A.shape[0], B.shape[0]), dtype=np.float64)
    for t in range(A.shape[1]):
        same += A[:, t, None] == B[None, :, t]
    return same / A.shape[1]


# ------------------------------------------------------------------------------------------


def _block_function(p: KernelParams, X: FloatMatrix) -> tuple[BlockFn, npt.NDArray[Any]]:
    """
    Vectorised ``K[A, B]`` for the resolved parameters ``p`` and the per-row operand it
    consumes.  The operand is ``X`` itself except for the isolation kind, whose blocks
    compare cell assignments.
    """
    if p.kind == "cosine":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        zero = np.flatnonzero(norms.ravel() == 0)
        if zero.size:
            raise KernelError(f"Cosine kernel: row {zero[0]} has zero norm")
        return (lambda A, B: np.clip(A @ B.T, -1.0, 1.0)), X / norms
    if p.kind == "linear":
        return (lambda A, B: A @ B.T + p.c), X
    if p.kind == "polynomial":
        return (lambda A, B: (A @ B.T + p.r) ** p.d), X
    if p.kind in ("gaussian", "laplacian"):
        s2 = 2.0 * (p.sigma or 1.0) ** 2
        metric = "sqeuclidean" if p.kind == "gaussian" else "cityblock"
        return (lambda A, B: np.exp(-cdist(A, B, metric) / s2)), X
    if p.kind == "sigmoid":
        gamma = p.gamma if p.gamma is not None else 1.0 / X.shape[1]
        return (lambda A, B: np.tanh(gamma * (A @ B.T) + p.c0)), X
    if p.kind == "chi2":
        g = p.gamma if p.gamma is not None else 1.0
        return (lambda A, B: np.exp(-g * _chi2_terms(A, B, additive=False))), X
    if p.kind == "additive_chi2":
        return (lambda A, B: _chi2_terms(A, B, additive=True)), X

    model = isolation_fit(X, p.psi, p.t_trees, p.seed)
    return _isolation_block, model.cells(X)


# ------------------------------------------------------------------------------------------


ScalarFn = Callable[[npt.ArrayLike, npt.ArrayLike, KernelParams], float]


def _gamma(p: KernelParams) -> float:
    return p.gamma if p.gamma is not None else 1.0


# Scalar evaluator per kind; parameters are read from a resolved KernelParams
KERNEL_KINDS: dict[str, ScalarFn] = {
    "cosine": lambda x, y, p: cosine(x, y),
    "linear": lambda x, y, p: linear(x, y, p.c),
    "polynomial": lambda x, y, p: polynomial(x, y, p.r, p.d),
    "gaussian": lambda x, y, p: gaussian(x, y, p.sigma or 1.0),
    "laplacian": lambda x, y, p: laplacian(x, y, p.sigma or 1.0),
    "sigmoid": lambda x, y, p: sigmoid(x, y, _gamma(p), p.c0),
    "chi2": lambda x, y, p: chi2(x, y, _gamma(p)),
    "additive_chi2": lambda x, y, p: additive_chi2(x, y),
}


def kernel_value(x: npt.ArrayLike, y: npt.ArrayLike, params: KernelParams) -> float:
    """
    Evaluate one kernel pair with the scalar functions.

    ``params`` must already be resolved (see :func:`resolve_params`); the isolation kind
    is not available pairwise without a fitted model and raises.
    """
    fn = KERNEL_KINDS.get(params.kind)
    if fn is None:
        raise KernelError("The isolation kernel needs a fitted IsolationModel; use isolation_value")
    return fn(x, y, params)


# ------------------------------------------------------------------------------------------


def kernel_matrix(
    data: EmbeddingMatrix, params: KernelParams, threads: int = 1, block_rows: int = BLOCK_ROWS
) -> KernelMatrix:
    """
    Compute the full n x n kernel matrix.

    Row blocks of the upper triangle are evaluated (optionally on ``threads`` workers) and
    mirrored into the lower triangle.  Block boundaries depend only on ``block_rows``, so
    the assembled matrix is identical for any thread count.  The isolation kind fits its
    model on ``data`` itself.

    Args:
        data: Embedding with at least two rows.
        params: Kernel parameters; unset data-driven defaults are resolved here.
        threads: Worker threads.
        block_rows: Rows per block.

    Returns:
        The kernel matrix with resolved parameters and numeric wall time attached.

    Raises:
        KernelError: Fewer than two rows, negative input to a chi-squared kind, a zero-norm
            row under cosine, or a non-finite entry (named by its (i, j) position).
    """
    logger = logging.getLogger("kernseq.kernel")
    X = np.ascontiguousarray(data.rows, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise KernelError(f"A kernel matrix needs at least 2 rows, got {n}")
    if params.kind in NONNEGATIVE_INPUT:
        neg = np.argwhere(X < 0)
        if neg.size:
            i, f = neg[0]
            raise KernelError(f"{params.kind}: negative entry at row {i} ({data.ids[i]}), feature index {f}")

    t0 = time.perf_counter()
    resolved = resolve_params(params, X)
    block, operand = _block_function(resolved, X)

    K = np.zeros((n, n), dtype=np.float64)

    def fill(start: int) -> None:
        stop = min(start + block_rows, n)
        K[start:stop, start:] = block(operand[start:stop], operand[start:])

    starts = list(range(0, n, block_rows))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    K = np.triu(K) + np.triu(K, 1).T
    if resolved.kind in UNIT_DIAGONAL:
        np.fill_diagonal(K, 1.0)
    elapsed = time.perf_counter() - t0

    bad = np.argwhere(~np.isfinite(K))
    if bad.size:
        i, j = bad[0]
        raise KernelError(
            f"{resolved.kind}: non-finite kernel value at ({i}, {j}) for {data.ids[i]}, {data.ids[j]}"
        )

    logger.info("Computed %s kernel matrix for n=%d in %.3fs", resolved.kind, n, elapsed)
    return KernelMatrix(K, list(data.ids), resolved, elapsed, list(data.labels))


# ==========================================================================================
# ==========================================================================================
# eof
