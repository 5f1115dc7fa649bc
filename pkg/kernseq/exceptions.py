# ==========================================================================================
# ==========================================================================================

# File:    exceptions.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Exception hierarchy shared by every kernseq module.  Each class carries the
#          process exit code the command line front end reports for it
# ==========================================================================================
# ==========================================================================================


class KernSeqError(Exception):
    """
    Base class for all errors raised deliberately by kernseq.

    Attributes:
        exit_code: Process exit status reported by the command line front end.
        stage: Pipeline stage that was running when the error surfaced, if any.
    """

    exit_code: int = 1
    stage: str | None = None


# ------------------------------------------------------------------------------------------


class ConfigError(KernSeqError):
    """Invalid configuration value, unknown kernel kind or embedding method."""

    exit_code = 2


# ==========================================================================================
# ==========================================================================================
# Input errors


class InputError(KernSeqError):
    """Missing, unreadable or malformed input."""

    exit_code = 3


# ------------------------------------------------------------------------------------------


class SequenceFormatError(InputError):
    """FASTA content that cannot be turned into validated sequences."""

    pass


# ------------------------------------------------------------------------------------------


class LabelFormatError(InputError):
    """Label table with a bad header, a malformed row or a duplicate id."""

    pass


# ------------------------------------------------------------------------------------------


class EmbeddingError(InputError):
    """Sequences that violate an embedding method's preconditions."""

    pass


# ------------------------------------------------------------------------------------------


class ContainerFormatError(InputError):
    """Binary KSEM/KSKM container with a bad magic, version or truncated payload."""

    pass


# ==========================================================================================
# ==========================================================================================
# Numeric errors


class NumericError(KernSeqError):
    """Numerical failure inside a compute stage."""

    exit_code = 4


# ------------------------------------------------------------------------------------------


class KernelError(NumericError):
    """Kernel evaluation failure (zero norm, negative chi-squared input, bad shapes)."""

    pass


# ------------------------------------------------------------------------------------------


class TsneError(NumericError):
    """
    t-SNE failure.

    Attributes:
        iteration: Optimisation step at which the failure was detected, or ``None`` when
            the error happened before the iteration loop started.
    """

    def __init__(self, message: str, iteration: int | None = None) -> None:
        super().__init__(message)
        self.iteration = iteration


# ------------------------------------------------------------------------------------------


class QualityError(NumericError):
    """Invalid neighbourhood or clustering evaluation request."""

    pass


# ==========================================================================================
# ==========================================================================================
# eof
