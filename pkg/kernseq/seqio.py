import csv
import dataclasses
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from Bio import SeqIO
from Bio.Seq import Seq
from Bio.SeqIO.FastaIO import FastaWriter
from Bio.SeqRecord import SeqRecord

from kernseq.exceptions import InputError, LabelFormatError, SequenceFormatError

# ==========================================================================================
# ==========================================================================================

# File:    seqio.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Read FASTA sequence files and label tables, validate residues against an
#          alphabet and summarise datasets
# ==========================================================================================
# ==========================================================================================
# Domain types

UnknownPolicy = Literal["reject", "replace-with-gap", "drop-sequence"]

UNKNOWN_POLICIES: dict[str, UnknownPolicy] = {
    "reject": "reject",
    "gap": "replace-with-gap",
    "replace-with-gap": "replace-with-gap",
    "drop": "drop-sequence",
    "drop-sequence": "drop-sequence",
}

ALPHABET_PRESETS: dict[str, str] = {
    "nucleotide": "ACGT-",
    "protein": "ACDEFGHIKLMNPQRSTVWY-",
}


@dataclass(frozen=True)
class Alphabet:
    """
    Ordered set of single-character residue symbols.

    Attributes:
        symbols: Distinct single characters.  Their order fixes feature indices.
        gap: Optional padding symbol, which must be one of ``symbols``.
    """

    symbols: tuple[str, ...]
    gap: str | None = None

    def __post_init__(self) -> None:
        if not self.symbols:
            raise SequenceFormatError("Alphabet must contain at least one symbol")
        if any(len(s) != 1 for s in self.symbols):
            raise SequenceFormatError(f"Alphabet symbols must be single characters: {self.symbols}")
        if len(set(self.symbols)) != len(self.symbols):
            raise SequenceFormatError(f"Alphabet symbols must be distinct: {''.join(self.symbols)}")
        if self.gap is not None and self.gap not in self.symbols:
            raise SequenceFormatError(f"Gap symbol '{self.gap}' is not a member of the alphabet")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        """Position of ``symbol`` in the alphabet."""
        return self.symbols.index(symbol)

    @classmethod
    def from_string(cls, symbols: str, gap: str | None = "-") -> "Alphabet":
        """Build an alphabet from a symbol string; ``gap`` is kept only if present."""
        upper = symbols.upper()
        return cls(tuple(upper), gap if gap is not None and gap in upper else None)


# ------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class Sequence:
    """A labeled biological sequence."""

    id: str
    residues: str
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.residues:
            raise SequenceFormatError(f"Sequence '{self.id}' has no residues")

    def __len__(self) -> int:
        return len(self.residues)


# ------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    """Length and class summary of a sequence collection."""

    count: int
    classes: dict[str, int]
    min_len: int
    max_len: int
    mean_len: float
    mode_len: float


# ==========================================================================================
# ==========================================================================================
# Alphabets


def resolve_alphabet(name_or_symbols: str) -> Alphabet:
    """
    Turn a preset name or an explicit symbol string into an :class:`Alphabet`.

    Args:
        name_or_symbols: ``"nucleotide"``, ``"protein"`` or a literal symbol string such
            as ``"ACGT-"``.  A ``-`` in the string becomes the gap symbol.

    Returns:
        The resolved alphabet.
    """
    symbols = ALPHABET_PRESETS.get(name_or_symbols.lower(), name_or_symbols)
    return Alphabet.from_string(symbols)


# ==========================================================================================
# ==========================================================================================
# FASTA


def parse_fasta(path: Path, alphabet: Alphabet, unknown_policy: str = "reject") -> list[Sequence]:
    """
    Read a FASTA file into validated :class:`Sequence` objects.

    Record ids are the header text up to the first whitespace.  Multi-line bodies are
    concatenated and upper-cased.  Symbols outside ``alphabet`` are handled per
    ``unknown_policy``:

      - ``reject``: raise, naming the record and the 1-based position.
      - ``replace-with-gap`` (``gap``): substitute the alphabet's gap symbol.
      - ``drop-sequence`` (``drop``): skip the whole record with a warning.

    Args:
        path: FASTA file.
        alphabet: Alphabet the residues must belong to.
        unknown_policy: One of the policy names above (CLI short forms accepted).

    Returns:
        Sequences in file order.

    Raises:
        InputError: If the file cannot be read.
        SequenceFormatError: Empty file, unparsable content, an empty record, or a
            ``reject`` policy hit.
    """
    logger = logging.getLogger("kernseq.seqio")
    policy = UNKNOWN_POLICIES.get(unknown_policy)
    if policy is None:
        raise SequenceFormatError(
            f"Unknown policy '{unknown_policy}'; expected one of {sorted(UNKNOWN_POLICIES)}"
        )
    if policy == "replace-with-gap" and alphabet.gap is None:
        raise SequenceFormatError("Policy replace-with-gap requires an alphabet with a gap symbol")

    try:
        records = list(SeqIO.parse(str(path), "fasta"))
    except OSError as e:
        raise InputError(f"Cannot read FASTA file {path}: {e}") from e
    except ValueError as e:
        raise SequenceFormatError(f"{path} is not a valid FASTA file: {e}") from e
    if not records:
        raise SequenceFormatError(f"FASTA file {path} contains no records")

    allowed = frozenset(alphabet.symbols)
    seqs: list[Sequence] = []
    dropped = 0
    for record in records:
        residues = str(record.seq).upper()
        if not residues:
            raise SequenceFormatError(f"Record '{record.id}' in {path} has an empty body")
        bad = [pos for pos, ch in enumerate(residues) if ch not in allowed]
        if bad:
            if policy == "reject":
                pos = bad[0]
                raise SequenceFormatError(
                    f"Record '{record.id}': symbol '{residues[pos]}' at position {pos + 1} "
                    f"is not in alphabet {''.join(alphabet.symbols)}"
                )
            if policy == "drop-sequence":
                dropped += 1
                logger.warning("Dropping record %s: %d out-of-alphabet symbols", record.id, len(bad))
                continue
            gap = alphabet.gap or ""
            chars = list(residues)
            for pos in bad:
                chars[pos] = gap
            residues = "".join(chars)
        seqs.append(Sequence(record.id, residues))

    if not seqs:
        raise SequenceFormatError(f"Every record in {path} was dropped by policy {policy}")
    logger.info("Parsed %d sequences from %s (%d dropped)", len(seqs), path, dropped)
    return seqs


# ------------------------------------------------------------------------------------------


def write_fasta(seqs: Iterable[Sequence], path: Path, line_width: int = 60) -> None:
    """
    Write sequences as FASTA, one ``>id`` header per record.

    Args:
        seqs: Sequences to write, in output order.
        path: Destination file.
        line_width: Residues per body line.
    """
    records = [SeqRecord(Seq(s.residues), id=s.id, description="") for s in seqs]
    with open(path, "w", encoding="utf-8") as handle:
        FastaWriter(handle, wrap=line_width).write_file(records)


# ==========================================================================================
# ==========================================================================================
# Labels


def load_labels(path: Path, delimiter: str = ",") -> dict[str, str]:
    """
    Read a two column ``id,label`` table with a header row.

    Blank lines are ignored.

    Args:
        path: Delimited text file.
        delimiter: Column separator.

    Returns:
        Mapping from sequence id to label.

    Raises:
        InputError: If the file cannot be read.
        LabelFormatError: Bad header, a row without exactly two columns, or a duplicate id.
    """
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f, delimiter=delimiter))
    except OSError as e:
        raise InputError(f"Cannot read label file {path}: {e}") from e

    rows = [(lineno, row) for lineno, row in enumerate(rows, start=1) if any(c.strip() for c in row)]
    if not rows:
        raise LabelFormatError(f"Label file {path} is empty")
    _, header = rows[0]
    if [c.strip().lower() for c in header] != ["id", "label"]:
        raise LabelFormatError(f"Label file {path} must start with an 'id{delimiter}label' header")

    labels: dict[str, str] = {}
    for lineno, row in rows[1:]:
        if len(row) != 2:
            raise LabelFormatError(f"{path} line {lineno}: expected 2 columns, found {len(row)}")
        seq_id, label = row[0].strip(), row[1].strip()
        if seq_id in labels:
            raise LabelFormatError(f"{path} line {lineno}: duplicate id '{seq_id}'")
        labels[seq_id] = label
    return labels


# ------------------------------------------------------------------------------------------


def attach_labels(seqs: list[Sequence], labels: Mapping[str, str]) -> list[Sequence]:
    """
    Return copies of ``seqs`` carrying the label found for their id.

    Sequences without a matching label keep ``label=None``.
    """
    out = [dataclasses.replace(s, label=labels.get(s.id)) for s in seqs]
    missing = sum(1 for s in out if s.label is None)
    if missing:
        logging.getLogger("kernseq.seqio").warning("%d of %d sequences have no label", missing, len(out))
    return out


# ==========================================================================================
# ==========================================================================================
# Summaries


def dataset_stats(seqs: list[Sequence]) -> DatasetStats:
    """
    Summarise sequence lengths and class counts.

    The mode breaks ties toward the smaller length.  Unlabeled sequences are grouped
    under the empty-string label so the class counts always sum to ``count``.

    Raises:
        InputError: If ``seqs`` is empty.
    """
    if not seqs:
        raise InputError("dataset_stats requires at least one sequence")
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    values, counts = np.unique(lengths, return_counts=True)
    mode = int(values[np.argmax(counts)])

    classes: dict[str, int] = {}
    for s in seqs:
        key = s.label if s.label is not None else ""
        classes[key] = classes.get(key, 0) + 1

    return DatasetStats(
        count=len(seqs),
        classes=dict(sorted(classes.items())),
        min_len=int(lengths.min()),
        max_len=int(lengths.max()),
        mean_len=float(lengths.mean()),
        mode_len=float(mode),
    )


# ==========================================================================================
# ==========================================================================================
# eof
