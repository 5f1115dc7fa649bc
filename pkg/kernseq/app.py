import argparse
import dataclasses
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
import numpy.typing as npt

from kernseq.bench import bench_kernels, bench_tsne, loglog_slope
from kernseq.embed import LENGTH_POLICIES, METHOD_ALIASES, METHODS, EmbeddingMatrix, embed_dataset
from kernseq.exceptions import ConfigError, InputError, KernSeqError
from kernseq.kernel import KINDS, KernelMatrix, kernel_matrix
from kernseq.logging_ext import configure_logging, run_context
from kernseq.pipeline import (
    DEFAULTS,
    PipelineConfig,
    build_config,
    compare_kernels,
    load_sequences,
    plot_coordinates,
    run_pipeline,
    tracked_stage,
    write_comparison,
)
from kernseq.quality import QualityReport, cluster_report, evaluate_embedding
from kernseq.read_files import load_json_config, read_coordinates, read_embedding, read_kernel, read_matrix
from kernseq.seqio import UNKNOWN_POLICIES, dataset_stats, load_labels, resolve_alphabet
from kernseq.tsne import kernel_to_sq_distances, run_tsne
from kernseq.write_files import (
    write_coordinates,
    write_embedding,
    write_json,
    write_kernel,
    write_kl_trace,
    write_scaling_csv,
)

# ==========================================================================================
# ==========================================================================================

# File:    app.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file integrates the kernseq stages into a single command line
#          application with one subcommand per stage plus the full pipeline
# ==========================================================================================
# ==========================================================================================
# Argument parsing

Handler = Callable[[argparse.Namespace, PipelineConfig], int]


def _kind(value: str) -> str:
    return value.strip().lower().replace("-", "_")


# ------------------------------------------------------------------------------------------


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {value!r}") from e


# ------------------------------------------------------------------------------------------


def _kind_list(value: str) -> list[str]:
    kinds = [_kind(v) for v in value.split(",") if v.strip()]
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown kernel kind(s) {unknown}; choose from {', '.join(KINDS)}")
    return kinds


# ------------------------------------------------------------------------------------------


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON configuration file merged over the defaults")
    p.add_argument("--seed", type=int, help="seed for every random choice of the run")
    p.add_argument("--threads", type=int, help="worker threads (falls back to KERNSEQ_THREADS)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return p


# ------------------------------------------------------------------------------------------


def _input_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("input")
    g.add_argument("--fasta", dest="input.fasta", help="FASTA file of sequences")
    g.add_argument("--labels", dest="input.labels", help="id,label table with a header row")
    g.add_argument("--label-delimiter", dest="input.label_delimiter")
    g.add_argument("--alphabet", dest="input.alphabet", help="nucleotide, protein or explicit symbols")
    g.add_argument("--unknown-policy", dest="input.unknown_policy", choices=UNKNOWN_POLICIES)
    return p


# ------------------------------------------------------------------------------------------


def _embedding_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("embedding")
    g.add_argument("--method", dest="embedding.method", choices=[*METHODS, *METHOD_ALIASES])
    g.add_argument("-k", "--k", type=int, dest="embedding.k", help="k-mer or minimizer window length")
    g.add_argument("--m", type=int, dest="embedding.m", help="minimizer length")
    g.add_argument("--g", type=int, dest="embedding.g", help="g-mer length for spaced k-mers")
    g.add_argument("--ohe-length-policy", dest="embedding.ohe_length_policy", choices=LENGTH_POLICIES)
    g.add_argument("--ohe-length", type=int, dest="embedding.ohe_length")
    g.add_argument("--on-short", dest="embedding.on_short", choices=("skip", "error"))
    return p


# ------------------------------------------------------------------------------------------


def _kernel_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("kernel")
    g.add_argument("--kind", type=_kind, dest="kernel.kind", choices=KINDS, help="kernel function")
    g.add_argument("--c", type=float, dest="kernel.c", help="polynomial offset")
    g.add_argument("--r", type=float, dest="kernel.r", help="polynomial scale")
    g.add_argument("--degree", type=int, dest="kernel.d", help="polynomial degree")
    g.add_argument("--sigma", type=float, dest="kernel.sigma", help="gaussian/laplacian width")
    g.add_argument("--gamma", type=float, dest="kernel.gamma", help="sigmoid slope or chi2 scale")
    g.add_argument("--c0", type=float, dest="kernel.c0", help="sigmoid offset")
    g.add_argument("--psi", type=int, dest="kernel.psi", help="isolation sample size")
    g.add_argument("--trees", type=int, dest="kernel.t_trees", help="isolation partitionings")
    return p


# ------------------------------------------------------------------------------------------


def _tsne_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("t-SNE")
    g.add_argument("--dim", type=int, dest="tsne.dim")
    g.add_argument("--perplexity", type=float, dest="tsne.perplexity")
    g.add_argument("--iters", "--max-iter", type=int, dest="tsne.max_iter", help="gradient steps")
    g.add_argument("--eta", type=float, dest="tsne.eta", help="learning rate")
    g.add_argument("--exaggeration", type=float, dest="tsne.exaggeration")
    return p


# ------------------------------------------------------------------------------------------


def _eval_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("evaluation")
    g.add_argument("--kmax", type=int, dest="eval.k_max", help="largest neighbourhood for AUC_RNX")
    g.add_argument("--cluster-k", dest="eval.cluster_k", help="cluster count or 'auto' (elbow)")
    g.add_argument(
        "--hd-from-kernel",
        action="store_const",
        const=True,
        dest="eval.hd_from_kernel",
        help="use kernel-induced distances for high dimensional neighbours",
    )
    return p


# ------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per stage; flag dests are ``section.key`` config paths."""
    common = _common_options()
    inp, emb, ker, tsn, ev = (
        _input_options(),
        _embedding_options(),
        _kernel_options(),
        _tsne_options(),
        _eval_options(),
    )
    parser = argparse.ArgumentParser(
        prog="kernseq", description="Sequence embeddings, kernel matrices, t-SNE and quality scores"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", parents=[common, inp, emb], help="FASTA to embedding matrix")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--binary", action="store_const", const=True, dest="output.binary")
    p.set_defaults(handler=cmd_embed)

    p = sub.add_parser("kernel", parents=[common, ker], help="embedding to kernel matrix")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--binary", action="store_const", const=True, dest="output.binary")
    p.set_defaults(handler=cmd_kernel)

    p = sub.add_parser("tsne", parents=[common, tsn], help="kernel matrix to coordinates")
    p.add_argument("--kernel-file", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--trace", type=Path, help="optional iter,kl CSV")
    p.set_defaults(handler=cmd_tsne)

    p = sub.add_parser("eval", parents=[common, ev], help="neighbourhood and clustering quality")
    p.add_argument("--hd", type=Path, help="high dimensional embedding or kernel matrix (CSV or container)")
    p.add_argument("--kernel-file", type=Path, help="kernel for --hd-from-kernel when --hd is an embedding")
    p.add_argument("--ld", type=Path, required=True, help="coordinates CSV")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="kernel and t-SNE runtime scaling")
    p.add_argument("--embedding", type=Path, help="embedding to sample; synthetic data when omitted")
    p.add_argument("--dim", type=int, default=100, help="feature count of synthetic data")
    p.add_argument("--sizes", type=_int_list, default=[500, 1000, 2000])
    p.add_argument("--kinds", type=_kind_list, default=["cosine", "gaussian", "laplacian"])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--tsne", action="store_true", help="also time t-SNE")
    p.add_argument("--out", type=Path, required=True, help="prefix for the .json and .csv reports")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("plot", parents=[common], help="coordinates to SVG scatter plot")
    p.add_argument("--coords", type=Path, required=True)
    p.add_argument("--labels", dest="input.labels", help="id,label table used to colour points")
    p.add_argument("--label-delimiter", dest="input.label_delimiter")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("run", parents=[common, inp, emb, ker, tsn, ev], help="full pipeline")
    p.add_argument("--out-dir", dest="output.directory")
    p.add_argument("--binary", action="store_const", const=True, dest="output.binary")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("stats", parents=[common, inp], help="dataset length and class summary")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("compare", parents=[common, tsn, ev], help="AUC_RNX and timings per kernel")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--kinds", type=_kind_list, default=list(KINDS))
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_compare)
    return parser


# ==========================================================================================
# ==========================================================================================
# Subcommands


def cmd_embed(args: argparse.Namespace, config: PipelineConfig) -> int:
    with tracked_stage("read", []):
        seqs = load_sequences(config)
    with tracked_stage("embed", []):
        emb = embed_dataset(seqs, config.embedding, resolve_alphabet(config.alphabet), config.threads)
        write_embedding(emb, args.out, config.binary)
    print(f"Wrote {emb.shape[0]} x {emb.shape[1]} {config.embedding.method} embedding to {args.out}")
    return 0


# ------------------------------------------------------------------------------------------


def cmd_kernel(args: argparse.Namespace, config: PipelineConfig) -> int:
    emb = read_embedding(args.embedding)
    with tracked_stage("kernel", []):
        K = kernel_matrix(emb, config.kernel, config.threads)
        write_kernel(K, args.out, config.binary)
    print(f"Wrote {K.n} x {K.n} {config.kernel.kind} kernel to {args.out} ({K.compute_seconds:.3f}s)")
    return 0


# ------------------------------------------------------------------------------------------


def cmd_tsne(args: argparse.Namespace, config: PipelineConfig) -> int:
    K = read_kernel(args.kernel_file)
    with tracked_stage("tsne", []):
        result = run_tsne(K, config.tsne)
        write_coordinates(result.ids, result.Y, args.out)
        if args.trace:
            write_kl_trace(result.kl_trace, args.trace)
    print(f"t-SNE n={K.n}: KL {result.kl_trace[0]:.4f} -> {result.kl_trace[-1]:.4f}; wrote {args.out}")
    return 0


# ------------------------------------------------------------------------------------------


def _aligned(source_ids: list[str], target_ids: list[str], what: str) -> None:
    if source_ids != target_ids:
        raise InputError(f"{what} ids do not match the coordinate ids row for row")


# ------------------------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace, config: PipelineConfig) -> int:
    ids, Y = read_coordinates(args.ld)
    hd = read_matrix(args.hd) if args.hd is not None else None
    kernel = hd if isinstance(hd, KernelMatrix) else None
    if kernel is None and config.hd_from_kernel:
        if args.kernel_file is None:
            raise ConfigError("--hd-from-kernel requires a kernel through --hd or --kernel-file")
        kernel = read_kernel(args.kernel_file)
    X_hd: npt.NDArray[np.float64] | None = None
    hd_distances = None
    if kernel is not None:
        _aligned(kernel.ids, ids, "Kernel")
        hd_distances = np.sqrt(kernel_to_sq_distances(kernel))
    elif isinstance(hd, EmbeddingMatrix):
        _aligned(hd.ids, ids, "Embedding")
        X_hd = hd.rows
    else:
        raise ConfigError("eval needs --hd (embedding or kernel) or --hd-from-kernel with --kernel-file")
    with tracked_stage("eval", []):
        curve = evaluate_embedding(X_hd, Y, config.k_max, hd_distances)
        clustering = cluster_report(Y, config.cluster_k, config.seed, config.k_range)
        write_json(QualityReport(curve, clustering).to_dict(), args.out)
    print(f"AUC_RNX {curve.auc_rnx:.4f} (k_max={curve.k_max}), k={clustering.k_clusters}; wrote {args.out}")
    return 0


# ------------------------------------------------------------------------------------------


def cmd_bench(args: argparse.Namespace, config: PipelineConfig) -> int:
    if args.embedding is not None:
        data = read_embedding(args.embedding)
    else:
        n = max(args.sizes, default=0)
        rng = np.random.default_rng(config.seed)
        rows = rng.random((n, args.dim))
        data = EmbeddingMatrix(rows, [f"s{i}" for i in range(n)], [f"f{j}" for j in range(args.dim)])
    with tracked_stage("bench", []):
        report = bench_kernels(data, args.sizes, args.kinds, args.repeats, config.seed, config.threads)
        if args.tsne:
            timed = bench_tsne(data, args.sizes, config.tsne, args.repeats, config.threads)
            report.tsne_series = timed.tsne_series
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_json(report.to_dict(), args.out.with_suffix(".json"))
    write_scaling_csv(report, args.out.with_suffix(".csv"))
    if len(report.sizes) >= 2:
        for kind, seconds in report.kernel_series.items():
            print(f"{kind}: log-log slope {loglog_slope(report.sizes, seconds):.2f}")
    return 0


# ------------------------------------------------------------------------------------------


def cmd_plot(args: argparse.Namespace, config: PipelineConfig) -> int:
    ids, Y = read_coordinates(args.coords)
    labels: list[str | None] = [None] * len(ids)
    if config.labels is not None:
        table = load_labels(config.labels, config.label_delimiter)
        labels = [table.get(seq_id) for seq_id in ids]
    with tracked_stage("plot", []):
        plot_coordinates(Y, ids, labels, args.out)
    print(f"Wrote {len(ids)} points to {args.out}")
    return 0


# ------------------------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace, config: PipelineConfig) -> int:
    run_pipeline(config)
    return 0


# ------------------------------------------------------------------------------------------


def cmd_stats(args: argparse.Namespace, config: PipelineConfig) -> int:
    stats = dataset_stats(load_sequences(config))
    print(json.dumps(dataclasses.asdict(stats), indent=2, sort_keys=True))
    return 0


# ------------------------------------------------------------------------------------------


def cmd_compare(args: argparse.Namespace, config: PipelineConfig) -> int:
    emb = read_embedding(args.embedding)
    with tracked_stage("compare", []):
        rows = compare_kernels(
            emb, args.kinds, config.tsne, config.k_max, config.seed, config.threads, config.kernel
        )
        write_comparison(rows, args.out)
    for row in rows:
        print(
            f"{row.kind:>14}  kernel {row.kernel_seconds:8.3f}s  "
            f"tsne {row.tsne_seconds:8.3f}s  auc_rnx {row.auc_rnx:.4f}"
        )
    return 0


# ==========================================================================================
# ==========================================================================================
# Entry point


def _apply_verbosity(verbose: int) -> None:
    if not verbose:
        return
    level = logging.INFO if verbose == 1 else logging.DEBUG
    logger = logging.getLogger("kernseq")
    logger.setLevel(level)
    for handler in logger.handlers:
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
            handler.setLevel(level)


# ------------------------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point for the ``kernseq`` command.

    The configuration is assembled as defaults, then the ``--config`` file, then flags.
    Logging is configured from the ``"logging"`` section before any stage runs.

    Args:
        argv: Arguments without the program name; ``sys.argv[1:]`` when ``None``.

    Returns:
        Process exit status: 0 on success, 2 for configuration errors, 3 for input
        errors and 4 for numeric failures.  argparse usage errors exit with 2 directly.

    Examples:
        >>> main(["run", "--fasta", "data/toy/toy.fasta", "--labels", "data/toy/labels.csv"])
        0
    """
    args = build_parser().parse_args(argv)
    handler: Handler = args.handler
    flags = {k: v for k, v in vars(args).items() if "." in k or k in ("seed", "threads")}
    try:
        file_cfg = load_json_config(args.config, DEFAULTS)
        configure_logging(file_cfg.get("logging"))
        _apply_verbosity(args.verbose)
        config = build_config(file_cfg, flags)
        with run_context():
            return handler(args, config)
    except KernSeqError as e:
        where = f" in stage '{e.stage}'" if e.stage else ""
        print(f"kernseq {args.command}: {type(e).__name__}{where}: {e}", file=sys.stderr)
        return e.exit_code


# ==========================================================================================
# ==========================================================================================
# eof
