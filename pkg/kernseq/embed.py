import dataclasses
import itertools
import logging
from collections import Counter, deque
from collections.abc import Sequence as SequenceABC
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view

from kernseq.exceptions import ConfigError, EmbeddingError
from kernseq.seqio import Alphabet, Sequence

# ==========================================================================================
# ==========================================================================================

# File:    embed.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Convert validated sequences into fixed-length vectors: one-hot encoding,
#          k-mer frequencies, minimizer frequencies and spaced k-mer frequencies
# ==========================================================================================
# ==========================================================================================
# Domain types

METHODS: tuple[str, ...] = ("ohe", "kmer", "minimizer", "spaced_kmer")
METHOD_ALIASES: dict[str, str] = {"spaced": "spaced_kmer", "spike2vec": "kmer"}
LENGTH_POLICIES: tuple[str, ...] = ("pad-to-max", "truncate-to-min", "fixed")

# Per-method defaults for the window parameters left unset in an EmbeddingConfig
DEFAULT_WINDOWS: dict[str, dict[str, int]] = {
    "kmer": {"k": 3},
    "minimizer": {"k": 9, "m": 3},
    "spaced_kmer": {"g": 9, "k": 6},
}

MAX_FEATURES = 2**22

FloatMatrix = npt.NDArray[np.float64]


@dataclass(frozen=True)
class EmbeddingConfig:
    """
    Embedding method and its window parameters.

    Attributes:
        method: ``ohe``, ``kmer``, ``minimizer`` or ``spaced_kmer``.
        k: k-mer length (kmer, minimizer window, spaced k-mer prefix).
        m: Minimizer length, ``1 <= m < k``.
        g: g-mer length for spaced k-mers, ``g > k``.
        ohe_length_policy: ``pad-to-max``, ``truncate-to-min`` or ``fixed``.
        ohe_length: Target length L when ``ohe_length_policy`` is ``fixed``.
        on_short: ``skip`` (warn and drop) or ``error`` for sequences shorter than the
            method's window.
        max_features: Upper bound on the embedding dimension.
    """

    method: str = "kmer"
    k: int | None = None
    m: int | None = None
    g: int | None = None
    ohe_length_policy: str = "pad-to-max"
    ohe_length: int | None = None
    on_short: str = "skip"
    max_features: int = MAX_FEATURES

    def __post_init__(self) -> None:
        method = METHOD_ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ConfigError(f"Unknown embedding method '{self.method}'; expected one of {METHODS}")
        object.__setattr__(self, "method", method)
        if self.ohe_length_policy not in LENGTH_POLICIES:
            raise ConfigError(f"Unknown OHE length policy '{self.ohe_length_policy}'")
        if self.ohe_length_policy == "fixed" and (self.ohe_length is None or self.ohe_length < 1):
            raise ConfigError("OHE length policy 'fixed' requires ohe_length >= 1")
        if self.on_short not in ("skip", "error"):
            raise ConfigError(f"on_short must be 'skip' or 'error', not '{self.on_short}'")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")

    def resolved(self) -> "EmbeddingConfig":
        """Return a copy with per-method window defaults filled in and checked."""
        defaults = DEFAULT_WINDOWS.get(self.method, {})
        updates = {name: value for name, value in defaults.items() if getattr(self, name) is None}
        cfg = dataclasses.replace(self, **updates)
        if cfg.method == "minimizer":
            _check_minimizer_window(cfg.k or 0, cfg.m or 0)
        if cfg.method == "spaced_kmer":
            _check_spaced_window(cfg.g or 0, cfg.k or 0)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# ------------------------------------------------------------------------------------------


@dataclass
class EmbeddingMatrix:
    """
    n x d embedding, one row per sequence.

    Attributes:
        rows: Real-valued matrix of shape ``(n, d)``.
        ids: Sequence ids aligned with ``rows``.
        feature_names: Names of the d columns.
        config: The resolved configuration that produced the matrix, when known.
        labels: Optional class label per row.
    """

    rows: FloatMatrix
    ids: list[str]
    feature_names: list[str]
    config: EmbeddingConfig | None = None
    labels: list[str | None] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise EmbeddingError(f"Embedding rows must be 2-D, got shape {self.rows.shape}")
        n, d = self.rows.shape
        if len(self.ids) != n:
            raise EmbeddingError(f"{len(self.ids)} ids for {n} rows")
        if len(self.feature_names) != d:
            raise EmbeddingError(f"{len(self.feature_names)} feature names for {d} columns")
        if not self.labels:
            self.labels = [None] * n
        elif len(self.labels) != n:
            raise EmbeddingError(f"{len(self.labels)} labels for {n} rows")

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.rows.shape[0]), int(self.rows.shape[1]))

    def head(self, n: int) -> "EmbeddingMatrix":
        """First ``n`` rows as a new matrix."""
        return EmbeddingMatrix(
            self.rows[:n].copy(), self.ids[:n], list(self.feature_names), self.config, self.labels[:n]
        )


# ==========================================================================================
# ==========================================================================================
# Shared helpers


def _check_minimizer_window(k: int, m: int) -> None:
    if not 1 <= m < k:
        raise EmbeddingError(f"Minimizers require 1 <= m < k, got k={k}, m={m}")


# ------------------------------------------------------------------------------------------


def _check_spaced_window(g: int, k: int) -> None:
    if not g > k >= 1:
        raise EmbeddingError(f"Spaced k-mers require g > k >= 1, got g={g}, k={k}")


# ------------------------------------------------------------------------------------------


def _residues(seq: Sequence | str) -> str:
    return seq.residues if isinstance(seq, Sequence) else seq


# ------------------------------------------------------------------------------------------


def _encode(residues: str, alphabet: Alphabet) -> npt.NDArray[np.int64]:
    """Map residues to alphabet positions."""
    lookup = {s: i for i, s in enumerate(alphabet.symbols)}
    try:
        return np.fromiter((lookup[ch] for ch in residues), dtype=np.int64, count=len(residues))
    except KeyError as e:
        raise EmbeddingError(f"Residue {e} is not in alphabet {''.join(alphabet.symbols)}") from None


# ------------------------------------------------------------------------------------------


def _index_space(alphabet: Alphabet, k: int, max_features: int = MAX_FEATURES) -> int:
    size = len(alphabet) ** k
    if size > max_features:
        raise EmbeddingError(
            f"|alphabet|^{k} = {size} features exceeds max_features={max_features}; use a smaller window"
        )
    return size


# ------------------------------------------------------------------------------------------


def _mer_indices(mers: SequenceABC[str], alphabet: Alphabet, k: int) -> npt.NDArray[np.int64]:
    """Base-|alphabet| index of each mer, first symbol most significant."""
    if not mers:
        return np.zeros(0, dtype=np.int64)
    codes = _encode("".join(mers), alphabet).reshape(len(mers), k)
    powers = len(alphabet) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return codes @ powers


# ------------------------------------------------------------------------------------------


def feature_names_for(alphabet: Alphabet, k: int) -> list[str]:
    """All k-mers over ``alphabet`` in index order (alphabet symbol order)."""
    return ["".join(p) for p in itertools.product(alphabet.symbols, repeat=k)]


# ------------------------------------------------------------------------------------------


def canonical(mer: str) -> str:
    """Lexicographic minimum of a string and its reversal."""
    rev = mer[::-1]
    return rev if rev < mer else mer


# ==========================================================================================
# ==========================================================================================
# One-hot encoding


def _resolve_length(lengths: list[int], policy: str, fixed: int | None) -> int:
    if policy == "pad-to-max":
        return max(lengths)
    if policy == "truncate-to-min":
        return min(lengths)
    assert fixed is not None
    return fixed


# ------------------------------------------------------------------------------------------


def one_hot_encode(
    seqs: list[Sequence], alphabet: Alphabet, policy: str = "pad-to-max", length: int | None = None
) -> EmbeddingMatrix:
    """
    Binary one-hot encoding of each sequence at a common length L.

    Position ``p`` holding symbol ``s`` sets column ``p * |alphabet| + index(s)``.
    Sequences shorter than L are padded with the gap symbol; longer ones are truncated.

    Args:
        seqs: Sequences validated against ``alphabet``.
        alphabet: Symbol set, with a gap symbol whenever padding is needed.
        policy: ``pad-to-max``, ``truncate-to-min`` or ``fixed``.
        length: L for the ``fixed`` policy.

    Raises:
        EmbeddingError: Padding is required and the alphabet has no gap symbol.
    """
    if not seqs:
        raise EmbeddingError("one_hot_encode requires at least one sequence")
    cfg = EmbeddingConfig(method="ohe", ohe_length_policy=policy, ohe_length=length)
    lengths = [len(s) for s in seqs]
    L = _resolve_length(lengths, policy, length)
    pad = alphabet.gap
    if any(n < L for n in lengths) and pad is None:
        raise EmbeddingError("Padding is required but the alphabet has no gap symbol")

    width = len(alphabet)
    rows = np.zeros((len(seqs), L * width), dtype=np.float64)
    positions = np.arange(L) * width
    for r, s in enumerate(seqs):
        residues = s.residues[:L]
        if len(residues) < L and pad is not None:
            residues = residues.ljust(L, pad)
        rows[r, positions + _encode(residues, alphabet)] = 1.0

    names = [f"{p}:{sym}" for p in range(L) for sym in alphabet.symbols]
    return EmbeddingMatrix(rows, [s.id for s in seqs], names, cfg, [s.label for s in seqs])


# ==========================================================================================
# ==========================================================================================
# k-mer, minimizer and spaced k-mer profiles


def kmer_profile(seq: Sequence | str, alphabet: Alphabet, k: int) -> npt.NDArray[np.float64]:
    """
    k-mer frequency vector of length ``|alphabet|**k``.

    Each entry counts the occurrences of its k-mer among the ``len - k + 1`` windows.

    Raises:
        EmbeddingError: The sequence is shorter than ``k``.
    """
    residues = _residues(seq)
    if k < 1 or len(residues) < k:
        raise EmbeddingError(f"Sequence of length {len(residues)} is shorter than k={k}")
    size = _index_space(alphabet, k)
    codes = _encode(residues, alphabet)
    powers = len(alphabet) ** np.arange(k - 1, -1, -1, dtype=np.int64)
    idx = sliding_window_view(codes, k) @ powers
    return np.bincount(idx, minlength=size).astype(np.float64)


# ------------------------------------------------------------------------------------------


def extract_minimizers(seq: Sequence | str, k: int, m: int) -> Counter[str]:
    """
    One minimizer per k-length window.

    The minimizer of a window is the smallest canonical m-mer among its ``k - m + 1``
    m-mers, where the canonical form of a mer is the lesser of it and its reversal.  A
    monotone deque over the canonical m-mer stream gives the sliding minimum.

    Returns:
        Multiset of minimizers; its total equals ``len - k + 1``.

    Raises:
        EmbeddingError: ``m >= k`` or the sequence is shorter than ``k``.
    """
    _check_minimizer_window(k, m)
    residues = _residues(seq)
    if len(residues) < k:
        raise EmbeddingError(f"Sequence of length {len(residues)} is shorter than k={k}")

    span = k - m + 1
    canon = [canonical(residues[i : i + m]) for i in range(len(residues) - m + 1)]
    window: deque[int] = deque()
    out: Counter[str] = Counter()
    for i, mer in enumerate(canon):
        while window and canon[window[-1]] > mer:
            window.pop()
        window.append(i)
        if window[0] <= i - span:
            window.popleft()
        if i >= span - 1:
            out[canon[window[0]]] += 1
    return out


# ------------------------------------------------------------------------------------------


def minimizer_profile(seq: Sequence | str, alphabet: Alphabet, k: int, m: int) -> npt.NDArray[np.float64]:
    """Histogram of :func:`extract_minimizers` over the ``|alphabet|**m`` m-mer space."""
    mins = extract_minimizers(seq, k, m)
    size = _index_space(alphabet, m)
    mers = list(mins)
    profile = np.zeros(size, dtype=np.float64)
    np.add.at(profile, _mer_indices(mers, alphabet, m), [mins[x] for x in mers])
    return profile


# ------------------------------------------------------------------------------------------


def spaced_kmer_profile(seq: Sequence | str, alphabet: Alphabet, g: int, k: int) -> npt.NDArray[np.float64]:
    """
    Spaced k-mer frequency vector of length ``|alphabet|**k``.

    Every g-length window contributes the first ``k`` characters of its canonical form.

    Raises:
        EmbeddingError: ``g <= k`` or the sequence is shorter than ``g``.
    """
    _check_spaced_window(g, k)
    residues = _residues(seq)
    if len(residues) < g:
        raise EmbeddingError(f"Sequence of length {len(residues)} is shorter than g={g}")
    size = _index_space(alphabet, k)
    prefixes = [canonical(residues[i : i + g])[:k] for i in range(len(residues) - g + 1)]
    return np.bincount(_mer_indices(prefixes, alphabet, k), minlength=size).astype(np.float64)


# ==========================================================================================
# ==========================================================================================
# Datasets


def _window(cfg: EmbeddingConfig) -> int:
    if cfg.method == "spaced_kmer":
        return cfg.g or 0
    return cfg.k or 0


# ------------------------------------------------------------------------------------------


def embed_dataset(
    seqs: list[Sequence], config: EmbeddingConfig, alphabet: Alphabet, threads: int = 1
) -> EmbeddingMatrix:
    """
    Embed every sequence with the configured method.

    Sequences shorter than the method's window are skipped with a warning or raise,
    according to ``config.on_short``.  Rows may be computed on several threads; the result
    does not depend on scheduling.

    Args:
        seqs: Validated sequences.
        config: Embedding configuration; unset window parameters take method defaults.
        alphabet: Alphabet the sequences were validated against.
        threads: Worker threads for per-sequence profiles.

    Raises:
        EmbeddingError: No sequence survives filtering, or a short sequence under
            ``on_short='error'``.
    """
    logger = logging.getLogger("kernseq.embed")
    cfg = config.resolved()

    if cfg.method == "ohe":
        if not seqs:
            raise EmbeddingError("No sequences to embed")
        emb = one_hot_encode(seqs, alphabet, cfg.ohe_length_policy, cfg.ohe_length)
        emb.config = cfg
        logger.info("One-hot encoded %d sequences into %d features", *emb.shape)
        return emb

    window = _window(cfg)
    kept: list[Sequence] = []
    for s in seqs:
        if len(s) >= window:
            kept.append(s)
        elif cfg.on_short == "error":
            raise EmbeddingError(f"Sequence '{s.id}' (length {len(s)}) is shorter than window {window}")
        else:
            logger.warning("Skipping sequence %s: length %d < window %d", s.id, len(s), window)
    if not kept:
        raise EmbeddingError(f"No sequence is at least {window} residues long")

    def profile(s: Sequence) -> npt.NDArray[np.float64]:
        if cfg.method == "kmer":
            return kmer_profile(s, alphabet, cfg.k or 0)
        if cfg.method == "minimizer":
            return minimizer_profile(s, alphabet, cfg.k or 0, cfg.m or 0)
        return spaced_kmer_profile(s, alphabet, cfg.g or 0, cfg.k or 0)

    bins = cfg.m if cfg.method == "minimizer" else cfg.k
    _index_space(alphabet, bins or 0, cfg.max_features)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(profile, kept))
    else:
        rows = [profile(s) for s in kept]

    emb = EmbeddingMatrix(
        np.vstack(rows),
        [s.id for s in kept],
        feature_names_for(alphabet, bins or 0),
        cfg,
        [s.label for s in kept],
    )
    logger.info("Embedded %d sequences with %s into %d features", emb.shape[0], cfg.method, emb.shape[1])
    return emb


# ==========================================================================================
# ==========================================================================================
# eof
