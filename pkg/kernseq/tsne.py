import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import cdist

from kernseq.exceptions import ConfigError, TsneError
from kernseq.kernel import KernelMatrix

# ==========================================================================================
# ==========================================================================================

# File:    tsne.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Exact t-SNE driven by a precomputed kernel matrix: per-point bandwidth
#          calibration, Student-t low dimensional affinities, KL divergence, its gradient
#          and the momentum gradient descent loop
# ==========================================================================================
# ==========================================================================================
# Domain types

SIGMA_BRACKET = (1e-20, 1e20)
MAX_BISECTIONS = 64
ENTROPY_TOL = 1e-5
Q_FLOOR = 1e-12

FloatMatrix = npt.NDArray[np.float64]


@dataclass(frozen=True)
class TsneConfig:
    """
    Optimiser settings.

    Attributes:
        dim: Output dimension.
        perplexity: Target perplexity; clamped to ``(n - 1) / 3`` at run time.
        max_iter: Number of gradient steps.
        eta: Learning rate.
        alpha_initial: Momentum before ``alpha_switch_iter``.
        alpha_late: Momentum from ``alpha_switch_iter`` on.
        alpha_switch_iter: Iteration at which the momentum switches.
        seed: Seed for the initial configuration.
        init_scale: Standard deviation of the initial configuration.
        exaggeration: Multiplier on P for the first ``exaggeration_iters`` steps; 1.0 is off.
        exaggeration_iters: Length of the exaggeration phase.
        requested_perplexity: Perplexity asked for when a clamp was applied, else ``None``.
    """

    dim: int = 2
    perplexity: float = 250.0
    max_iter: int = 1000
    eta: float = 500.0
    alpha_initial: float = 0.5
    alpha_late: float = 0.8
    alpha_switch_iter: int = 250
    seed: int = 0
    init_scale: float = 1e-4
    exaggeration: float = 1.0
    exaggeration_iters: int = 250
    requested_perplexity: float | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"tsne dim must be >= 1, got {self.dim}")
        if self.perplexity <= 0:
            raise ConfigError(f"perplexity must be positive, got {self.perplexity}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0 <= self.alpha_initial <= self.alpha_late < 1:
            raise ConfigError(
                f"momentum must satisfy 0 <= alpha_initial <= alpha_late < 1, "
                f"got {self.alpha_initial}, {self.alpha_late}"
            )
        if self.alpha_switch_iter < 0:
            raise ConfigError(f"alpha_switch_iter must be >= 0, got {self.alpha_switch_iter}")
        if self.init_scale <= 0:
            raise ConfigError(f"init_scale must be positive, got {self.init_scale}")
        if self.exaggeration <= 0 or self.exaggeration_iters < 0:
            raise ConfigError("exaggeration must be positive and exaggeration_iters non-negative")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# ------------------------------------------------------------------------------------------


@dataclass
class AffinityMatrix:
    """Symmetric joint high dimensional affinities and the calibrated bandwidths."""

    P: FloatMatrix
    per_point_sigma: npt.NDArray[np.float64]
    perplexity: float


# ------------------------------------------------------------------------------------------


@dataclass
class TsneResult:
    """
    Output of :func:`run_tsne`.

    Attributes:
        Y: Low dimensional coordinates, shape ``(n, dim)``.
        kl_trace: KL divergence evaluated at the start of every iteration.
        config: Effective configuration, including any perplexity clamp.
        elapsed_seconds: Wall time of the optimisation.
        ids: Row ids carried over from the kernel matrix.
        labels: Row labels carried over from the kernel matrix.
    """

    Y: FloatMatrix
    kl_trace: npt.NDArray[np.float64]
    config: TsneConfig
    elapsed_seconds: float
    ids: list[str] = field(default_factory=list)
    labels: list[str | None] = field(default_factory=list)


# ==========================================================================================
# ==========================================================================================
# High dimensional affinities


def kernel_to_sq_distances(K: KernelMatrix | FloatMatrix) -> FloatMatrix:
    """
    Kernel-induced squared distances ``K_ii + K_jj - 2 K_ij``, floored at zero.

    Raises:
        TsneError: ``K`` is not square and symmetric within 1e-9.
    """
    V = np.asarray(K.values if isinstance(K, KernelMatrix) else K, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise TsneError(f"Kernel matrix must be square, got shape {V.shape}")
    if not np.allclose(V, V.T, rtol=0.0, atol=1e-9):
        raise TsneError("Kernel matrix is not symmetric")
    diag = np.diag(V)
    D2 = np.maximum(diag[:, None] + diag[None, :] - 2.0 * V, 0.0)
    np.fill_diagonal(D2, 0.0)
    return D2


# ------------------------------------------------------------------------------------------


def _conditional(d: FloatMatrix, sigma: float) -> tuple[npt.NDArray[np.float64], float]:
    """Row conditional for bandwidth ``sigma`` and its natural-log entropy."""
    with np.errstate(over="ignore"):
        a = -(d - d.min()) / (2.0 * sigma * sigma)
    w = np.exp(a)
    z = w.sum()
    live = w > 0
    return w / z, float(math.log(z) - (w[live] * a[live]).sum() / z)


# ------------------------------------------------------------------------------------------


def hd_affinities(D2: FloatMatrix, perplexity: float) -> AffinityMatrix:
    """
    Calibrate one Gaussian bandwidth per point and symmetrise the conditionals.

    For every row the bandwidth is found by geometric bisection over
    ``[1e-20, 1e20]`` (at most 64 steps) until the conditional's entropy is within 1e-5
    of ``log(perplexity)``.  A row whose distances to all other points are equal gets the
    uniform conditional.  The joint matrix is ``(p_j|i + p_i|j) / (2n)``.

    Args:
        D2: Square matrix of squared distances.
        perplexity: Target perplexity, ``1 <= perplexity < n``.

    Raises:
        TsneError: Perplexity outside that range.
    """
    logger = logging.getLogger("kernseq.tsne")
    D2 = np.asarray(D2, dtype=np.float64)
    n = D2.shape[0]
    if perplexity >= n:
        raise TsneError(f"perplexity {perplexity} must be below n={n}; clamp it to at most {(n - 1) / 3:g}")
    if perplexity < 1:
        raise TsneError(f"perplexity must be >= 1, got {perplexity}")

    target = math.log(perplexity)
    cond = np.zeros((n, n), dtype=np.float64)
    sigmas = np.empty(n, dtype=np.float64)
    uniform_rows = 0
    for i in range(n):
        d = np.delete(D2[i], i)
        others = np.arange(n) != i
        if d.max() - d.min() == 0:
            cond[i, others] = 1.0 / (n - 1)
            sigmas[i] = np.inf
            uniform_rows += 1
            continue
        lo, hi = SIGMA_BRACKET
        sigma = math.sqrt(lo * hi)
        p, h = _conditional(d, sigma)
        for _ in range(MAX_BISECTIONS):
            if abs(h - target) < ENTROPY_TOL:
                break
            if h > target:
                hi = sigma
            else:
                lo = sigma
            sigma = math.sqrt(lo * hi)
            p, h = _conditional(d, sigma)
        cond[i, others] = p
        sigmas[i] = sigma

    if uniform_rows == n:
        logger.warning("All %d points are equidistant; using uniform affinities", n)
    elif uniform_rows:
        logger.debug("%d rows with equal distances use uniform conditionals", uniform_rows)

    P = (cond + cond.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    return AffinityMatrix(P, sigmas, float(perplexity))


# ==========================================================================================
# ==========================================================================================
# Low dimensional affinities and objective


def ld_affinities(Y: FloatMatrix) -> tuple[FloatMatrix, FloatMatrix]:
    """
    Student-t affinities of a configuration.

    Returns:
        ``(Q, N)`` where ``N[i, j] = 1 / (1 + ||y_i - y_j||^2)`` off the diagonal and
        ``Q = N / sum(N)``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    N = 1.0 / (1.0 + cdist(Y, Y, "sqeuclidean"))
    np.fill_diagonal(N, 0.0)
    return N / N.sum(), N


# ------------------------------------------------------------------------------------------


def kl_divergence(P: AffinityMatrix | FloatMatrix, Q: FloatMatrix) -> float:
    """``sum P log(P / max(Q, 1e-12))`` over entries with ``P > 0``."""
    Pm = P.P if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)
    if Pm.shape != Q.shape:
        raise TsneError(f"P {Pm.shape} and Q {Q.shape} differ in shape")
    mask = Pm > 0
    np.fill_diagonal(mask, False)
    p = Pm[mask]
    return float(np.sum(p * np.log(p / np.maximum(Q[mask], Q_FLOOR))))


# ------------------------------------------------------------------------------------------


def gradient(P: AffinityMatrix | FloatMatrix, Q: FloatMatrix, N: FloatMatrix, Y: FloatMatrix) -> FloatMatrix:
    """``grad_i = 4 sum_j (P_ij - Q_ij) N_ij (y_i - y_j)``."""
    Pm = P.P if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)
    W = (Pm - Q) * N
    return 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)


# ==========================================================================================
# ==========================================================================================
# Optimisation


def clamp_perplexity(config: TsneConfig, n: int) -> TsneConfig:
    """Limit the perplexity to ``(n - 1) / 3``, recording the requested value."""
    limit = (n - 1) / 3.0
    if config.perplexity <= limit:
        return config
    logging.getLogger("kernseq.tsne").warning(
        "Perplexity %g is too large for n=%d; clamped to %g", config.perplexity, n, limit
    )
    return dataclasses.replace(config, perplexity=limit, requested_perplexity=config.perplexity)


# ------------------------------------------------------------------------------------------


def run_tsne(K: KernelMatrix, config: TsneConfig) -> TsneResult:
    """
    Embed the rows of a kernel matrix in ``config.dim`` dimensions.

    The initial configuration is drawn from a standard normal generator seeded with
    ``config.seed`` and scaled by ``init_scale``.  Each step evaluates Q and KL, then
    applies ``Y <- Y - eta grad + alpha (Y - Y_prev)`` and re-centres Y to zero mean.

    Args:
        K: Symmetric kernel matrix with ``n >= 4``.
        config: Optimiser settings.

    Returns:
        Coordinates, per-iteration KL trace and the effective configuration.

    Raises:
        TsneError: ``n < 4``, ``dim >= n`` or a non-finite coordinate (the error carries
            the iteration index).
    """
    logger = logging.getLogger("kernseq.tsne")
    n = K.n
    if n < 4:
        raise TsneError(f"t-SNE needs at least 4 points, got {n}")
    if config.dim >= n:
        raise TsneError(f"Output dimension {config.dim} must be below n={n}")
    cfg = clamp_perplexity(config, n)

    t0 = time.perf_counter()
    aff = hd_affinities(kernel_to_sq_distances(K), cfg.perplexity)
    rng = np.random.default_rng(cfg.seed)
    Y = rng.standard_normal((n, cfg.dim)) * cfg.init_scale
    Y -= Y.mean(axis=0)
    Y_prev = Y.copy()
    trace = np.empty(cfg.max_iter, dtype=np.float64)
    P_boost = aff.P * cfg.exaggeration

    for it in range(cfg.max_iter):
        Q, N = ld_affinities(Y)
        trace[it] = kl_divergence(aff.P, Q)
        P_step = P_boost if it < cfg.exaggeration_iters and cfg.exaggeration != 1.0 else aff.P
        grad = gradient(P_step, Q, N, Y)
        alpha = cfg.alpha_initial if it < cfg.alpha_switch_iter else cfg.alpha_late
        Y_new = Y - cfg.eta * grad + alpha * (Y - Y_prev)
        Y_new -= Y_new.mean(axis=0)
        if not np.all(np.isfinite(Y_new)):
            raise TsneError(f"Non-finite coordinates at iteration {it}; lower eta", iteration=it)
        Y_prev, Y = Y, Y_new
        if it % 100 == 0:
            logger.debug("iteration %d KL %.6f", it, trace[it])

    elapsed = time.perf_counter() - t0
    logger.info("t-SNE on n=%d finished: KL %.4f -> %.4f in %.2fs", n, trace[0], trace[-1], elapsed)
    return TsneResult(Y, trace, cfg, elapsed, list(K.ids), list(K.labels))


# ==========================================================================================
# ==========================================================================================
# eof
