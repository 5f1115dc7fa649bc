import copy
import dataclasses
import logging
import os
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from kernseq.embed import EmbeddingConfig, EmbeddingMatrix, embed_dataset
from kernseq.exceptions import ConfigError, InputError, KernSeqError, NumericError
from kernseq.kernel import KernelParams, kernel_matrix
from kernseq.logging_ext import run_context, stage
from kernseq.plot import ScatterSpec, plot_scatter
from kernseq.quality import DEFAULT_K_RANGE, QualityReport, cluster_report, evaluate_embedding
from kernseq.read_files import _deep_update
from kernseq.seqio import Sequence as SequenceRecord
from kernseq.seqio import attach_labels, load_labels, parse_fasta, resolve_alphabet
from kernseq.tsne import TsneConfig, kernel_to_sq_distances, run_tsne
from kernseq.write_files import write_coordinates, write_embedding, write_json, write_kernel, write_table

# ==========================================================================================
# ==========================================================================================

# File:    pipeline.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Pipeline configuration with flag > file > default precedence, the end-to-end
#          FASTA to plot run and the kernel comparison table
# ==========================================================================================
# ==========================================================================================
# Global Data

THREADS_ENV = "KERNSEQ_THREADS"

DEFAULTS: dict[str, Any] = {
    "input": {
        "fasta": None,
        "labels": None,
        "label_delimiter": ",",
        "alphabet": "nucleotide",
        "unknown_policy": "reject",
    },
    "embedding": {
        "method": "kmer",
        "k": None,
        "m": None,
        "g": None,
        "ohe_length_policy": "pad-to-max",
        "ohe_length": None,
        "on_short": "skip",
    },
    "kernel": {
        "kind": "cosine",
        "c": 0.0,
        "r": 1.0,
        "d": 3,
        "sigma": None,
        "gamma": None,
        "c0": 0.0,
        "psi": 16,
        "t_trees": 200,
    },
    "tsne": {
        "dim": 2,
        "perplexity": 250.0,
        "max_iter": 1000,
        "eta": 500.0,
        "alpha_initial": 0.5,
        "alpha_late": 0.8,
        "alpha_switch_iter": 250,
        "init_scale": 1e-4,
        "exaggeration": 1.0,
        "exaggeration_iters": 250,
    },
    "eval": {
        "k_max": 99,
        "cluster_k": "auto",
        "k_range": list(DEFAULT_K_RANGE),
        "hd_from_kernel": False,
    },
    "output": {"directory": "output", "binary": False},
    "seed": 0,
    "threads": None,
    "logging": {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": "%(asctime)s %(levelname)s %(name)s [run=%(run_id)s stage=%(stage)s] %(message)s"
            }
        },
        "filters": {"run_context": {"()": "kernseq.logging_ext.RunContextFilter"}},
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": "WARNING",
                "formatter": "standard",
                "filters": ["run_context"],
            }
        },
        "loggers": {"kernseq": {"level": "INFO", "handlers": ["console"]}},
    },
}

ARTIFACTS: tuple[str, ...] = ("embedding", "kernel", "coordinates", "quality", "plot")

# ==========================================================================================
# ==========================================================================================
# Configuration


def _section(cls: type, values: dict[str, Any], name: str) -> Any:
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"Invalid '{name}' configuration: {e}") from e


# ------------------------------------------------------------------------------------------


def _optional_path(value: str | Path | None) -> Path | None:
    return Path(value) if value else None


# ------------------------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """
    Everything one run needs.  :meth:`from_dict` accepts the merged JSON configuration;
    the top-level ``seed`` is copied into the kernel, t-SNE and clustering seeds.
    """

    fasta: Path | None = None
    labels: Path | None = None
    label_delimiter: str = ","
    alphabet: str = "nucleotide"
    unknown_policy: str = "reject"
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    kernel: KernelParams = field(default_factory=KernelParams)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    k_max: int = 99
    cluster_k: int | str = "auto"
    k_range: list[int] = field(default_factory=lambda: list(DEFAULT_K_RANGE))
    hd_from_kernel: bool = False
    output_dir: Path = Path("output")
    binary: bool = False
    seed: int = 0
    threads: int = 1
    logging: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, cfg: dict[str, Any]) -> "PipelineConfig":
        merged = _deep_update(DEFAULTS, cfg)
        seed = int(merged["seed"])
        inp, ev, out = merged["input"], merged["eval"], merged["output"]
        cluster_k = ev["cluster_k"]
        if cluster_k != "auto":
            try:
                cluster_k = int(cluster_k)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"cluster_k must be 'auto' or an integer, got {cluster_k!r}") from e
        return cls(
            fasta=_optional_path(inp["fasta"]),
            labels=_optional_path(inp["labels"]),
            label_delimiter=inp["label_delimiter"],
            alphabet=inp["alphabet"],
            unknown_policy=inp["unknown_policy"],
            embedding=_section(EmbeddingConfig, merged["embedding"], "embedding"),
            kernel=_section(KernelParams, {**merged["kernel"], "seed": seed}, "kernel"),
            tsne=_section(TsneConfig, {**merged["tsne"], "seed": seed}, "tsne"),
            k_max=int(ev["k_max"]),
            cluster_k=cluster_k,
            k_range=[int(k) for k in ev["k_range"]],
            hd_from_kernel=bool(ev["hd_from_kernel"]),
            output_dir=Path(out["directory"]),
            binary=bool(out["binary"]),
            seed=seed,
            threads=resolve_threads(None, merged["threads"]),
            logging=merged["logging"],
        )

    def to_dict(self) -> dict[str, Any]:
        """Configuration document that :meth:`from_dict` reads back to an equal config."""
        embedding = self.embedding.to_dict()
        embedding.pop("max_features", None)
        kernel = {k: v for k, v in self.kernel.to_dict().items() if k in DEFAULTS["kernel"]}
        tsne = {k: v for k, v in self.tsne.to_dict().items() if k in DEFAULTS["tsne"]}
        return {
            "input": {
                "fasta": str(self.fasta) if self.fasta else None,
                "labels": str(self.labels) if self.labels else None,
                "label_delimiter": self.label_delimiter,
                "alphabet": self.alphabet,
                "unknown_policy": self.unknown_policy,
            },
            "embedding": embedding,
            "kernel": kernel,
            "tsne": tsne,
            "eval": {
                "k_max": self.k_max,
                "cluster_k": self.cluster_k,
                "k_range": list(self.k_range),
                "hd_from_kernel": self.hd_from_kernel,
            },
            "output": {"directory": str(self.output_dir), "binary": self.binary},
            "seed": self.seed,
            "threads": self.threads,
            "logging": copy.deepcopy(self.logging),
        }


# ------------------------------------------------------------------------------------------


def resolve_threads(flag: int | None, configured: int | None) -> int:
    """Thread count from the flag, then ``KERNSEQ_THREADS``, then the config file, then 1."""
    if flag is not None:
        threads = flag
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {os.environ[THREADS_ENV]!r}") from e
    elif configured is not None:
        threads = int(configured)
    else:
        threads = 1
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    return threads


# ------------------------------------------------------------------------------------------


def nest_overrides(flat: dict[str, Any]) -> dict[str, Any]:
    """
    Turn ``{"kernel.kind": "gaussian", "seed": 3, "tsne.dim": None}`` into a nested
    override document, dropping ``None`` values so unset flags never override.
    """
    out: dict[str, Any] = {}
    for key, value in flat.items():
        if value is None:
            continue
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return out


# ------------------------------------------------------------------------------------------


def build_config(file_cfg: dict[str, Any], flags: dict[str, Any]) -> PipelineConfig:
    """
    Apply flag > file > default precedence and build a :class:`PipelineConfig`.

    Args:
        file_cfg: Configuration already merged over :data:`DEFAULTS` (or a raw document).
        flags: Flat ``section.key`` mapping from the command line; ``threads`` is
            resolved separately so the environment variable sits between flag and file.
    """
    flags = dict(flags)
    thread_flag = flags.pop("threads", None)
    merged = _deep_update(file_cfg, nest_overrides(flags))
    config = PipelineConfig.from_dict(merged)
    config.threads = resolve_threads(thread_flag, merged.get("threads"))
    return config


# ==========================================================================================
# ==========================================================================================
# Pipeline


@dataclass
class PipelineResult:
    """Summary of a completed run."""

    run_id: str
    n: int
    kernel_kind: str
    auc_rnx: float
    elapsed_seconds: float
    artifacts: dict[str, Path]

    def summary(self) -> str:
        return (
            f"run {self.run_id}: n={self.n} kernel={self.kernel_kind} "
            f"auc_rnx={self.auc_rnx:.4f} elapsed={self.elapsed_seconds:.2f}s"
        )


# ------------------------------------------------------------------------------------------


def artifact_paths(output_dir: Path, binary: bool = False) -> dict[str, Path]:
    return {
        "embedding": output_dir / ("embedding.ksem" if binary else "embedding.csv"),
        "kernel": output_dir / ("kernel.kskm" if binary else "kernel.csv"),
        "coordinates": output_dir / "coordinates.csv",
        "quality": output_dir / "quality.json",
        "plot": output_dir / "plot.svg",
    }


# ------------------------------------------------------------------------------------------


def _fail_stage(name: str, error: KernSeqError, written: list[Path], logger: logging.Logger) -> None:
    error.stage = error.stage or name
    for path in written:
        if path.exists():
            path.replace(path.with_name(path.name + ".partial"))
    logger.error("stage %s failed: %s", name, error)


# ------------------------------------------------------------------------------------------


@contextmanager
def tracked_stage(name: str, written: list[Path]) -> Iterator[None]:
    """
    Run a stage; on failure tag the error with the stage and mark outputs partial.

    File system errors surface as :class:`InputError` and arithmetic or value errors as
    :class:`NumericError`, so every failure carries an exit code.
    """
    logger = logging.getLogger("kernseq.pipeline")
    try:
        with stage(name, logger):
            yield
    except KernSeqError as e:
        _fail_stage(name, e, written, logger)
        raise
    except OSError as e:
        error: KernSeqError = InputError(str(e))
        _fail_stage(name, error, written, logger)
        raise error from e
    except (ValueError, ArithmeticError) as e:
        error = NumericError(str(e))
        _fail_stage(name, error, written, logger)
        raise error from e


# ------------------------------------------------------------------------------------------


def load_sequences(config: PipelineConfig) -> list[SequenceRecord]:
    """Parse the configured FASTA file and attach labels when a label file is set."""
    if config.fasta is None:
        raise ConfigError("No FASTA input configured (input.fasta / --fasta)")
    alphabet = resolve_alphabet(config.alphabet)
    seqs = parse_fasta(config.fasta, alphabet, config.unknown_policy)
    if config.labels is not None:
        seqs = attach_labels(seqs, load_labels(config.labels, config.label_delimiter))
    return seqs


# ------------------------------------------------------------------------------------------


def plot_coordinates(Y: np.ndarray, ids: list[str], labels: list[str | None], path: Path) -> None:
    """Scatter the first two output dimensions; a one dimensional run is drawn on a line."""
    points = Y[:, :2] if Y.shape[1] >= 2 else np.column_stack([Y[:, 0], np.zeros(Y.shape[0])])
    plot_scatter(ScatterSpec(points, labels=list(labels), ids=list(ids)), path)


# ------------------------------------------------------------------------------------------


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """
    FASTA to embedding, kernel matrix, t-SNE coordinates, quality report and plot.

    Artifacts are written to ``config.output_dir`` as each stage finishes.  When a stage
    fails, files already written are renamed with a ``.partial`` suffix and the error is
    re-raised carrying the stage name.  A one-line summary is printed on success.

    Returns:
        Run id, dataset size, kernel kind, AUC_RNX, elapsed time and artifact paths.
    """
    paths = artifact_paths(config.output_dir, config.binary)
    written: list[Path] = []
    t0 = time.perf_counter()
    with run_context() as run_id:
        logger = logging.getLogger("kernseq.pipeline")
        logger.info("Starting run with output directory %s", config.output_dir)
        config.output_dir.mkdir(parents=True, exist_ok=True)

        with tracked_stage("read", written):
            seqs = load_sequences(config)
            alphabet = resolve_alphabet(config.alphabet)

        with tracked_stage("embed", written):
            emb = embed_dataset(seqs, config.embedding, alphabet, config.threads)
            write_embedding(emb, paths["embedding"], config.binary)
            written.append(paths["embedding"])

        with tracked_stage("kernel", written):
            K = kernel_matrix(emb, config.kernel, config.threads)
            write_kernel(K, paths["kernel"], config.binary)
            written.append(paths["kernel"])

        with tracked_stage("tsne", written):
            result = run_tsne(K, config.tsne)
            write_coordinates(result.ids, result.Y, paths["coordinates"])
            written.append(paths["coordinates"])

        with tracked_stage("eval", written):
            hd_distances = np.sqrt(kernel_to_sq_distances(K)) if config.hd_from_kernel else None
            curve = evaluate_embedding(emb.rows, result.Y, config.k_max, hd_distances)
            clustering = cluster_report(result.Y, config.cluster_k, config.seed, config.k_range)
            write_json(QualityReport(curve, clustering).to_dict(), paths["quality"])
            written.append(paths["quality"])

        with tracked_stage("plot", written):
            plot_coordinates(result.Y, result.ids, result.labels, paths["plot"])
            written.append(paths["plot"])

        kind = K.params.kind if K.params else config.kernel.kind
        outcome = PipelineResult(run_id, emb.shape[0], kind, curve.auc_rnx, time.perf_counter() - t0, paths)
        logger.info(outcome.summary())
    print(outcome.summary())
    return outcome


# ==========================================================================================
# ==========================================================================================
# Kernel comparison


@dataclass(frozen=True)
class ComparisonRow:
    kind: str
    kernel_seconds: float
    tsne_seconds: float
    auc_rnx: float


# ------------------------------------------------------------------------------------------


def compare_kernels(
    emb: EmbeddingMatrix,
    kinds: Sequence[str],
    tsne_config: TsneConfig,
    k_max: int = 99,
    seed: int = 0,
    threads: int = 1,
    base_params: KernelParams | None = None,
) -> list[ComparisonRow]:
    """
    Run kernel matrix, t-SNE and neighbourhood evaluation for each kernel kind.

    Args:
        emb: Embedding shared by every kind.
        kinds: Kernel kinds, reported in this order.
        tsne_config: t-SNE settings; its seed is replaced by ``seed``.
        k_max: Largest neighbourhood for AUC_RNX.
        seed: Seed for kernel sampling and t-SNE initialisation.
        threads: Kernel worker threads.
        base_params: Shared kernel parameters; only ``kind`` and ``seed`` change per row.
    """
    logger = logging.getLogger("kernseq.pipeline")
    base = base_params or KernelParams()
    tsne_cfg = dataclasses.replace(tsne_config, seed=seed)
    rows = []
    for kind in kinds:
        params = dataclasses.replace(base, kind=kind, seed=seed)
        if params.kind != base.kind:
            params = dataclasses.replace(params, sigma=None, gamma=None)
        K = kernel_matrix(emb, params, threads)
        result = run_tsne(K, tsne_cfg)
        curve = evaluate_embedding(emb.rows, result.Y, k_max)
        row = ComparisonRow(params.kind, K.compute_seconds, result.elapsed_seconds, curve.auc_rnx)
        logger.info("%s: kernel %.3fs tsne %.3fs auc_rnx %.4f", *dataclasses.astuple(row))
        rows.append(row)
    return rows


# ------------------------------------------------------------------------------------------


def write_comparison(rows: Sequence[ComparisonRow], path: Path) -> None:
    write_table(
        ["kind", "kernel_seconds", "tsne_seconds", "auc_rnx"],
        [[r.kind, r.kernel_seconds, r.tsne_seconds, r.auc_rnx] for r in rows],
        path,
    )


# ==========================================================================================
# ==========================================================================================
# eof
