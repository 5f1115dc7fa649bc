from types import SimpleNamespace

import numpy as np
import pytest

import kernseq.bench as bench
from kernseq.bench import ScalingReport, bench_kernels, bench_tsne, environment_descriptor, loglog_slope
from kernseq.embed import EmbeddingMatrix
from kernseq.exceptions import ConfigError
from kernseq.tsne import TsneConfig

# ==========================================================================================
# ==========================================================================================
# File:    bench_test.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file contains unit tests for the runtime scaling harness in bench.py
# ==========================================================================================
# ==========================================================================================
# Test support code


def random_embedding(n: int, d: int = 20, seed: int = 0) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(
        rng.random((n, d)), [f"s{i}" for i in range(n)], [f"f{j}" for j in range(d)]
    )


# ==========================================================================================
# ==========================================================================================
# Harness behaviour


def test_bench_kernels_discards_warm_up_and_takes_median(monkeypatch: pytest.MonkeyPatch):
    """Each size gets one warm-up call plus ``repeats`` timed calls summarised by the median."""
    calls: list[int] = []
    times = iter([100.0, 3.0, 1.0, 2.0, 100.0, 6.0, 4.0, 5.0])

    def fake_kernel_matrix(data, params, threads):
        calls.append(data.shape[0])
        return SimpleNamespace(compute_seconds=next(times))

    monkeypatch.setattr(bench, "kernel_matrix", fake_kernel_matrix)
    report = bench_kernels(random_embedding(10), [4, 8], ["cosine"], repeats=3)
    assert calls == [4, 4, 4, 4, 8, 8, 8, 8]
    assert report.kernel_series == {"cosine": [2.0, 5.0]}
    assert report.sizes == [4, 8]
    assert report.tsne_series == []


# ------------------------------------------------------------------------------------------


def test_bench_tsne_builds_kernel_outside_timing(monkeypatch: pytest.MonkeyPatch):
    """The kernel is built once per size and only run_tsne is repeated."""
    kernel_calls: list[int] = []
    tsne_calls: list[int] = []

    def fake_kernel_matrix(data, params, threads):
        kernel_calls.append(data.shape[0])
        return SimpleNamespace(n=data.shape[0])

    def fake_run_tsne(K, config):
        tsne_calls.append(K.n)
        return SimpleNamespace(elapsed_seconds=0.5)

    monkeypatch.setattr(bench, "kernel_matrix", fake_kernel_matrix)
    monkeypatch.setattr(bench, "run_tsne", fake_run_tsne)
    report = bench_tsne(random_embedding(12), [6, 12], TsneConfig(max_iter=5), repeats=2)
    assert kernel_calls == [6, 12]
    assert tsne_calls == [6, 6, 6, 12, 12, 12]
    assert report.tsne_series == [0.5, 0.5]
    assert report.kernel_series == {}


# ------------------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "sizes,repeats,match",
    [([], 3, "At least one"), ([5], 0, "repeats"), ([1], 1, "below 2"), ([50], 1, "exceeds")],
    ids=["no_sizes", "no_repeats", "too_small", "too_large"],
)
def test_bench_rejects_invalid_plans(sizes, repeats, match):
    """Invalid size lists and repeat counts are configuration errors."""
    with pytest.raises(ConfigError, match=match):
        bench_kernels(random_embedding(10), sizes, ["cosine"], repeats=repeats)


# ------------------------------------------------------------------------------------------


def test_scaling_report_to_dict_and_environment():
    """The report serialises its series and records the thread count."""
    report = ScalingReport([2, 4], {"gaussian": [0.1, 0.4]}, [], 3, environment_descriptor(2), 2)
    payload = report.to_dict()
    assert payload["kernel_series"] == {"gaussian": [0.1, 0.4]}
    assert payload["threads"] == 2
    assert "numpy" in payload["environment"]
    assert payload["environment"].endswith("threads 2")


# ------------------------------------------------------------------------------------------


def test_loglog_slope_exact_power_law():
    """A quadratic law has slope 2 and a linear law slope 1."""
    sizes = [10, 20, 40, 80]
    assert loglog_slope(sizes, [s**2 * 1e-6 for s in sizes]) == pytest.approx(2.0)
    assert loglog_slope(sizes, [s * 3e-4 for s in sizes]) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        loglog_slope([10], [1.0])


# ==========================================================================================
# ==========================================================================================
# Measured scaling


@pytest.mark.slow
def test_kernel_runtime_orders_by_cost():
    """On the same rows the isolation kernel is slower than cosine."""
    report = bench_kernels(random_embedding(400, 64), [400], ["cosine", "isolation"], repeats=3)
    assert report.kernel_series["isolation"][0] > report.kernel_series["cosine"][0]


# ------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_cosine_is_fastest_dense_kernel():
    """At n=2000, d=1000 the cosine median beats both the Gaussian and Laplacian medians."""
    kinds = ["cosine", "gaussian", "laplacian"]
    report = bench_kernels(random_embedding(2000, 1000), [2000], kinds, repeats=3)
    cosine = report.kernel_series["cosine"][0]
    assert cosine < report.kernel_series["gaussian"][0]
    assert cosine < report.kernel_series["laplacian"][0]


# ------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_cosine_kernel_scales_quadratically():
    """Cosine kernel time over 500, 1000 and 2000 rows has a log-log slope in [1.5, 2.5]."""
    sizes = [500, 1000, 2000]
    report = bench_kernels(random_embedding(2000, 1000), sizes, ["cosine"], repeats=3)
    assert 1.5 <= loglog_slope(sizes, report.kernel_series["cosine"]) <= 2.5


# ==========================================================================================
# ==========================================================================================
# eof
