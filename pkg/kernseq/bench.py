import logging
import os
import platform
import statistics
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Any

import numpy as np

from kernseq.embed import EmbeddingMatrix
from kernseq.exceptions import ConfigError
from kernseq.kernel import KernelMatrix, KernelParams, kernel_matrix
from kernseq.tsne import TsneConfig, run_tsne

# ==========================================================================================
# ==========================================================================================

# File:    bench.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Runtime scaling measurements for kernel matrix construction and t-SNE over
#          growing prefixes of an embedding
# ==========================================================================================
# ==========================================================================================
# Domain types


@dataclass
class ScalingReport:
    """
    Median wall times per size.

    Attributes:
        sizes: Numbers of rows measured, in request order.
        kernel_series: Kernel kind to seconds per size.
        tsne_series: t-SNE seconds per size (empty when not measured).
        repeats: Timed repeats behind each median.
        environment: Free text machine descriptor.
        threads: Thread count handed to the measured operations.
    """

    sizes: list[int]
    kernel_series: dict[str, list[float]] = field(default_factory=dict)
    tsne_series: list[float] = field(default_factory=list)
    repeats: int = 3
    environment: str = ""
    threads: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "sizes": list(self.sizes),
            "kernel_series": {k: list(v) for k, v in self.kernel_series.items()},
            "tsne_series": list(self.tsne_series),
            "repeats": self.repeats,
            "environment": self.environment,
            "threads": self.threads,
        }


# ==========================================================================================
# ==========================================================================================


def environment_descriptor(threads: int = 1) -> str:
    """One-line description of the interpreter, numpy build and machine."""
    return (
        f"{platform.platform()}; python {platform.python_version()}; numpy {np.__version__}; "
        f"cpus {os.cpu_count()}; threads {threads}"
    )


# ------------------------------------------------------------------------------------------


def _check_sizes(data: EmbeddingMatrix, sizes: Sequence[int], repeats: int) -> None:
    if not sizes:
        raise ConfigError("At least one benchmark size is required")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    available = data.shape[0]
    for size in sizes:
        if size < 2:
            raise ConfigError(f"Benchmark size {size} is below 2")
        if size > available:
            raise ConfigError(f"Benchmark size {size} exceeds the {available} available rows")


# ------------------------------------------------------------------------------------------


def _kernel_seconds(data: EmbeddingMatrix, params: KernelParams, threads: int) -> float:
    return kernel_matrix(data, params, threads).compute_seconds


def _tsne_seconds(K: KernelMatrix, config: TsneConfig) -> float:
    return run_tsne(K, config).elapsed_seconds


# ------------------------------------------------------------------------------------------


def _median_of(timed: Callable[[], float], repeats: int) -> float:
    """Run ``timed`` once as a warm-up, then return the median of ``repeats`` runs."""
    timed()
    return statistics.median(timed() for _ in range(repeats))


# ------------------------------------------------------------------------------------------


def bench_kernels(
    data: EmbeddingMatrix,
    sizes: Sequence[int],
    kinds: Sequence[str],
    repeats: int = 3,
    seed: int = 0,
    threads: int = 1,
) -> ScalingReport:
    """
    Time :func:`kernseq.kernel.kernel_matrix` on the first ``size`` rows of ``data``.

    Each (size, kind) pair gets one discarded warm-up run followed by ``repeats`` timed
    runs.  The recorded time is the kernel matrix's own ``compute_seconds``, so parameter
    setup and any I/O stay outside the measurement.

    Raises:
        ConfigError: Empty ``sizes``, a size above the row count, or ``repeats < 1``.
    """
    logger = logging.getLogger("kernseq.bench")
    _check_sizes(data, sizes, repeats)
    params = {kind: KernelParams(kind=kind, seed=seed) for kind in kinds}
    report = ScalingReport(
        list(sizes), {kind: [] for kind in params}, [], repeats, environment_descriptor(threads), threads
    )
    for size in sizes:
        subset = data.head(size)
        for kind, p in params.items():
            seconds = _median_of(partial(_kernel_seconds, subset, p, threads), repeats)
            report.kernel_series[kind].append(seconds)
            logger.info("kernel %s n=%d median %.4fs", kind, size, seconds)
    return report


# ------------------------------------------------------------------------------------------


def bench_tsne(
    data: EmbeddingMatrix,
    sizes: Sequence[int],
    config: TsneConfig,
    repeats: int = 3,
    threads: int = 1,
) -> ScalingReport:
    """
    Time :func:`kernseq.tsne.run_tsne` on cosine kernel matrices of growing prefixes.

    The kernel matrix for each size is built once, outside the timed region.
    """
    logger = logging.getLogger("kernseq.bench")
    _check_sizes(data, sizes, repeats)
    report = ScalingReport(list(sizes), {}, [], repeats, environment_descriptor(threads), threads)
    for size in sizes:
        K = kernel_matrix(data.head(size), KernelParams(kind="cosine", seed=config.seed), threads)
        seconds = _median_of(partial(_tsne_seconds, K, config), repeats)
        report.tsne_series.append(seconds)
        logger.info("tsne n=%d median %.4fs", size, seconds)
    return report


# ------------------------------------------------------------------------------------------


def loglog_slope(sizes: Sequence[int], seconds: Sequence[float]) -> float:
    """Least squares slope of ``log(seconds)`` against ``log(size)``."""
    if len(sizes) != len(seconds) or len(sizes) < 2:
        raise ConfigError("A slope needs at least two (size, seconds) pairs of equal length")
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(np.asarray(seconds, dtype=float)), 1)
    return float(slope)


# ==========================================================================================
# ==========================================================================================
# eof
