from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from kernseq.seqio import Sequence, write_fasta

# ==========================================================================================
# ==========================================================================================

# File:    conftest.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: This file contains pytest fixtures and mark information
# ==========================================================================================
# ==========================================================================================
# Toy sequence corpus

TOY_CLASSES: dict[str, str] = {"alpha": "AAATTA", "beta": "CCGGCG", "gamma": "ACGTTG"}


def toy_sequences(per_class: int = 7, seed: int = 11) -> list[Sequence]:
    """
    Labeled nucleotide sequences whose classes differ in residue composition.

    Each position draws from the class bias string with probability 0.6 and uniformly
    from ACGT otherwise, so k-mer profiles separate the classes.
    """
    rng = np.random.default_rng(seed)
    seqs = []
    idx = 0
    for label, bias in TOY_CLASSES.items():
        for _ in range(per_class):
            idx += 1
            length = int(rng.integers(60, 85))
            chars = [
                bias[rng.integers(len(bias))] if rng.random() < 0.6 else "ACGT"[rng.integers(4)]
                for _ in range(length)
            ]
            seqs.append(Sequence(f"toy{idx:02d}", "".join(chars), label))
    return seqs


# ------------------------------------------------------------------------------------------


@pytest.fixture
def toy_corpus(tmp_path: Path) -> tuple[Path, Path]:
    """Write a 21 sequence, 3 class corpus; returns the FASTA and label file paths."""
    seqs = toy_sequences()
    fasta = tmp_path / "toy.fasta"
    labels = tmp_path / "labels.csv"
    write_fasta(seqs, fasta)
    lines = ["id,label", *(f"{s.id},{s.label}" for s in seqs)]
    labels.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return fasta, labels


# ==========================================================================================
# ==========================================================================================
# Synthetic point clouds


def make_blobs(
    n_per: int, centers: int, dim: int, separation: float = 10.0, spread: float = 1.0, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Isotropic Gaussian blobs with centres ``separation`` apart along distinct axes.

    Returns:
        Points of shape ``(n_per * centers, dim)`` and their integer blob labels.
    """
    rng = np.random.default_rng(seed)
    means = np.zeros((centers, dim))
    for c in range(centers):
        means[c, c % dim] = separation * (1 + c // dim)
    X = np.vstack([means[c] + spread * rng.standard_normal((n_per, dim)) for c in range(centers)])
    y = np.repeat(np.arange(centers), n_per)
    return X, y


# ------------------------------------------------------------------------------------------


@pytest.fixture
def blobs() -> Callable[..., tuple[np.ndarray, np.ndarray]]:
    """Factory fixture around :func:`make_blobs`."""
    return make_blobs


# ==========================================================================================
# ==========================================================================================
# eof
