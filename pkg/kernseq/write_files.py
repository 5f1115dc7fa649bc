import csv
import json
import logging
import struct
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from kernseq.bench import ScalingReport
from kernseq.embed import EmbeddingMatrix
from kernseq.exceptions import InputError
from kernseq.kernel import KernelMatrix
from kernseq.read_files import CONTAINER_VERSION, EMBEDDING_MAGIC, KERNEL_MAGIC

# ==========================================================================================
# ==========================================================================================

# File:    write_files.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Writers for every artifact kernseq produces: embedding and kernel matrices
#          (CSV and binary containers), coordinates, KL traces, JSON reports and
#          scaling tables
# ==========================================================================================
# ==========================================================================================


def _num(v: float) -> str:
    """Shortest text that reads back to the same double."""
    return repr(float(v))


# ------------------------------------------------------------------------------------------


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise InputError(f"Cannot write {path}: {e}") from e
    logging.getLogger("kernseq.io").debug("Wrote %s", path)


# ------------------------------------------------------------------------------------------


def _write_container(
    path: Path,
    magic: bytes,
    values: npt.NDArray[np.float64],
    ids: list[str],
    meta: dict[str, Any],
    square: bool,
) -> None:
    """
    Layout: magic, u32 version, u64 n [, u64 d], row-major little-endian f64 values,
    then per id a u32 byte length and UTF-8 bytes, then a u32 length and JSON metadata.
    """
    n = values.shape[0]
    parts = [magic, struct.pack("<I", CONTAINER_VERSION), struct.pack("<Q", n)]
    if not square:
        parts.append(struct.pack("<Q", values.shape[1]))
    parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    for seq_id in ids:
        raw = seq_id.encode("utf-8")
        parts += [struct.pack("<I", len(raw)), raw]
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts += [struct.pack("<I", len(blob)), blob]
    try:
        with open(path, "wb") as f:
            f.write(b"".join(parts))
    except OSError as e:
        raise InputError(f"Cannot write {path}: {e}") from e


# ==========================================================================================
# ==========================================================================================
# Matrices


def write_embedding(emb: EmbeddingMatrix, path: Path, binary: bool = False) -> None:
    """Write an embedding as CSV (``id,<feature names>``) or as a KSEM container."""
    if binary:
        meta = {
            "config": emb.config.to_dict() if emb.config else None,
            "feature_names": emb.feature_names,
            "labels": emb.labels,
        }
        _write_container(path, EMBEDDING_MAGIC, emb.rows, emb.ids, meta, square=False)
        return
    rows = [[seq_id, *(_num(v) for v in row)] for seq_id, row in zip(emb.ids, emb.rows, strict=True)]
    _write_csv(path, ["id", *emb.feature_names], rows)


# ------------------------------------------------------------------------------------------


def write_kernel(K: KernelMatrix, path: Path, binary: bool = False) -> None:
    """Write a kernel matrix as CSV (header = ids) or as a KSKM container."""
    if binary:
        meta = {
            "params": K.params.to_dict() if K.params else None,
            "compute_seconds": K.compute_seconds,
            "labels": K.labels,
        }
        _write_container(path, KERNEL_MAGIC, K.values, K.ids, meta, square=True)
        return
    _write_csv(path, K.ids, [[_num(v) for v in row] for row in K.values])


# ==========================================================================================
# ==========================================================================================
# t-SNE output


def write_coordinates(ids: Sequence[str], Y: npt.NDArray[np.float64], path: Path) -> None:
    """``id,y1..y_dim`` with round-trip exact floats."""
    header = ["id", *(f"y{j + 1}" for j in range(Y.shape[1]))]
    _write_csv(path, header, [[seq_id, *(_num(v) for v in row)] for seq_id, row in zip(ids, Y, strict=True)])


# ------------------------------------------------------------------------------------------


def write_kl_trace(trace: Sequence[float], path: Path) -> None:
    _write_csv(path, ["iter", "kl"], [[i, _num(kl)] for i, kl in enumerate(trace)])


# ==========================================================================================
# ==========================================================================================
# Reports


def write_json(payload: dict[str, Any], path: Path) -> None:
    """Pretty-printed JSON with sorted keys."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise InputError(f"Cannot write {path}: {e}") from e


# ------------------------------------------------------------------------------------------


def write_scaling_csv(report: ScalingReport, path: Path) -> None:
    """One row per size; one column per kernel kind plus ``tsne`` when measured."""
    kinds = list(report.kernel_series)
    header = ["size", *kinds] + (["tsne"] if report.tsne_series else [])
    rows = []
    for i, size in enumerate(report.sizes):
        row: list[Any] = [size, *(_num(report.kernel_series[k][i]) for k in kinds)]
        if report.tsne_series:
            row.append(_num(report.tsne_series[i]))
        rows.append(row)
    _write_csv(path, header, rows)


# ------------------------------------------------------------------------------------------


def write_table(header: Sequence[str], rows: Sequence[Sequence[Any]], path: Path) -> None:
    """Generic CSV table, floats written round-trip exact."""
    _write_csv(path, header, [[_num(v) if isinstance(v, float) else v for v in row] for row in rows])


# ==========================================================================================
# ==========================================================================================
# eof
