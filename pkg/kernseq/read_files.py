import csv
import json
import logging
import struct
from pathlib import Path
from typing import Any, BinaryIO

import numpy as np
import numpy.typing as npt

from kernseq.embed import EmbeddingConfig, EmbeddingMatrix
from kernseq.exceptions import ConfigError, ContainerFormatError, InputError, KernSeqError
from kernseq.kernel import KernelMatrix, KernelParams

# ==========================================================================================
# ==========================================================================================

# File:    read_files.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file contains functions used to read files specific to the kernseq
#          application: JSON configuration, embedding and kernel matrices (CSV and the
#          KSEM/KSKM binary containers) and coordinate tables
# ==========================================================================================
# ==========================================================================================
# Read JSON Config File

EMBEDDING_MAGIC = b"KSEM"
KERNEL_MAGIC = b"KSKM"
CONTAINER_VERSION = 1


def _deep_update(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """
    Recursively merge two dictionaries without mutating the inputs.

    For each key in ``override``:
      - If both ``base[key]`` and ``override[key]`` are dictionaries, merge them
        recursively.
      - Otherwise, ``override[key]`` replaces ``base[key]`` (or is added if missing).

    Args:
        base: The original mapping to be used as the merge base.
        override: The mapping whose values take precedence over ``base``.

    Returns:
        A new dictionary containing the merged result.

    Notes:
        - Only nested ``dict`` values are merged recursively. Lists such as
          ``eval.k_range`` are *replaced*.
        - If ``override`` is falsy (e.g., ``None`` or ``{}``), a shallow copy of
          ``base`` is returned.

    Examples:
        >>> _deep_update({"kernel": {"kind": "cosine"}}, {"kernel": {"psi": 8}, "seed": 3})
        {'kernel': {'kind': 'cosine', 'psi': 8}, 'seed': 3}
    """
    out = dict(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_update(out[k], v)
        else:
            out[k] = v
    return out


# ------------------------------------------------------------------------------------------


def load_json_config(config_path: Path | None, defaults: dict[str, Any]) -> dict[str, Any]:
    """
    Load a JSON configuration file and merge it over ``defaults``.

    If ``config_path`` is ``None`` the defaults are returned unchanged.  A path that does
    not exist logs a warning on ``kernseq.config`` and also returns the defaults.

    Args:
        config_path: Filesystem path to a JSON config file, or ``None``.
        defaults: Mapping the file is merged over; never mutated.

    Returns:
        The effective configuration.

    Raises:
        ConfigError: The file is not valid JSON or its top level is not an object.
        InputError: The file exists but cannot be read.
    """
    if not config_path:
        return defaults
    if not config_path.exists():
        logger = logging.getLogger("kernseq.config")
        logger.warning("Config file %s not found. Using defaults.", config_path)
        return defaults
    try:
        with config_path.open("r", encoding="utf-8") as f:
            user_cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {config_path} is not valid JSON: {e}") from e
    except OSError as e:
        raise InputError(f"Cannot read config file {config_path}: {e}") from e
    if not isinstance(user_cfg, dict):
        raise ConfigError(f"Config file {config_path} must contain a JSON object")
    return _deep_update(defaults, user_cfg)


# ==========================================================================================
# ==========================================================================================
# Binary containers


def _read_exact(f: BinaryIO, size: int, what: str, path: Path) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise ContainerFormatError(f"{path} is truncated while reading {what}")
    return data


# ------------------------------------------------------------------------------------------


def _read_container(
    path: Path, magic: bytes, square: bool
) -> tuple[npt.NDArray[np.float64], list[str], dict[str, Any]]:
    """Matrix, id table and metadata of a KSEM (``square=False``) or KSKM container."""
    try:
        f = open(path, "rb")
    except OSError as e:
        raise InputError(f"Cannot read {path}: {e}") from e
    with f:
        found = _read_exact(f, 4, "magic", path)
        if found != magic:
            raise ContainerFormatError(f"{path}: expected magic {magic!r}, found {found!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version", path))
        if version != CONTAINER_VERSION:
            raise ContainerFormatError(f"{path}: unsupported container version {version}")
        (n,) = struct.unpack("<Q", _read_exact(f, 8, "row count", path))
        if square:
            d = n
        else:
            (d,) = struct.unpack("<Q", _read_exact(f, 8, "column count", path))
        values = np.frombuffer(_read_exact(f, 8 * n * d, "matrix", path), dtype="<f8").reshape(n, d)
        ids = []
        for _ in range(n):
            (length,) = struct.unpack("<I", _read_exact(f, 4, "id length", path))
            ids.append(_read_exact(f, length, "id", path).decode("utf-8"))
        meta: dict[str, Any] = {}
        trailer = f.read(4)
        if trailer:
            if len(trailer) != 4:
                raise ContainerFormatError(f"{path} is truncated while reading metadata length")
            (length,) = struct.unpack("<I", trailer)
            try:
                meta = json.loads(_read_exact(f, length, "metadata", path).decode("utf-8"))
            except json.JSONDecodeError as e:
                raise ContainerFormatError(f"{path}: metadata block is not valid JSON") from e
    return values.astype(np.float64), ids, meta


# ------------------------------------------------------------------------------------------


def _is_container(path: Path, magic: bytes) -> bool:
    try:
        with open(path, "rb") as f:
            return f.read(4) == magic
    except OSError as e:
        raise InputError(f"Cannot read {path}: {e}") from e


# ==========================================================================================
# ==========================================================================================
# CSV tables


def _read_rows(path: Path) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if row]
    except OSError as e:
        raise InputError(f"Cannot read {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise InputError(f"{path} is not a UTF-8 text file") from e
    if not rows:
        raise InputError(f"{path} is empty")
    return rows


# ------------------------------------------------------------------------------------------


def _floats(cells: list[str], path: Path, lineno: int) -> list[float]:
    try:
        return [float(c) for c in cells]
    except ValueError as e:
        raise InputError(f"{path} line {lineno}: {e}") from e


# ------------------------------------------------------------------------------------------


def read_embedding(path: Path) -> EmbeddingMatrix:
    """
    Read an embedding from CSV (header ``id,<feature names>``) or a KSEM container.

    The format is detected from the file's leading bytes.
    """
    if _is_container(path, EMBEDDING_MAGIC):
        values, ids, meta = _read_container(path, EMBEDDING_MAGIC, square=False)
        config = EmbeddingConfig(**meta["config"]) if meta.get("config") else None
        names = meta.get("feature_names") or [f"f{j}" for j in range(values.shape[1])]
        return EmbeddingMatrix(values, ids, names, config, meta.get("labels") or [])

    rows = _read_rows(path)
    header = rows[0]
    if not header or header[0] != "id":
        raise InputError(f"{path}: embedding CSV must start with an 'id' column")
    ids, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path} line {lineno}: expected {len(header)} columns, found {len(row)}")
        ids.append(row[0])
        data.append(_floats(row[1:], path, lineno))
    try:
        values = np.array(data, dtype=np.float64).reshape(len(ids), len(header) - 1)
        return EmbeddingMatrix(values, ids, header[1:])
    except KernSeqError as e:
        raise InputError(f"{path}: {e}") from e


# ------------------------------------------------------------------------------------------


def read_kernel(path: Path) -> KernelMatrix:
    """Read a kernel matrix from CSV (header = ids, n x n values) or a KSKM container."""
    if _is_container(path, KERNEL_MAGIC):
        values, ids, meta = _read_container(path, KERNEL_MAGIC, square=True)
        params = KernelParams(**meta["params"]) if meta.get("params") else None
        seconds = float(meta.get("compute_seconds", 0.0))
        return KernelMatrix(values, ids, params, seconds, meta.get("labels") or [])

    rows = _read_rows(path)
    ids = rows[0]
    n = len(ids)
    if len(rows) - 1 != n:
        raise InputError(f"{path}: kernel CSV has {len(rows) - 1} rows for {n} ids")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n:
            raise InputError(f"{path} line {lineno}: expected {n} values, found {len(row)}")
        data.append(_floats(row, path, lineno))
    return KernelMatrix(np.array(data, dtype=np.float64), ids)


# ------------------------------------------------------------------------------------------


def read_matrix(path: Path) -> EmbeddingMatrix | KernelMatrix:
    """
    Read either an embedding or a kernel matrix, whichever ``path`` holds.

    Containers are told apart by their magic bytes.  A CSV whose first header cell is
    ``id`` is an embedding; any other CSV is read as a kernel matrix with an id header.
    """
    if _is_container(path, KERNEL_MAGIC):
        return read_kernel(path)
    if _is_container(path, EMBEDDING_MAGIC):
        return read_embedding(path)
    header = _read_rows(path)[0]
    return read_embedding(path) if header and header[0] == "id" else read_kernel(path)


# ------------------------------------------------------------------------------------------


def read_coordinates(path: Path) -> tuple[list[str], npt.NDArray[np.float64]]:
    """Read an ``id,y1..y_dim`` coordinate table."""
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 2 or header[0] != "id":
        raise InputError(f"{path}: coordinates CSV must have columns id, y1..y_dim")
    ids, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path} line {lineno}: expected {len(header)} columns, found {len(row)}")
        ids.append(row[0])
        data.append(_floats(row[1:], path, lineno))
    if not ids:
        raise InputError(f"{path} holds no coordinates")
    return ids, np.array(data, dtype=np.float64)


# ==========================================================================================
# ==========================================================================================
# eof
