import logging
import logging.config
import os
import time
import uuid
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path
from typing import Any

# ==========================================================================================
# ==========================================================================================

# File:    logging_ext.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Logging filter that injects the pipeline run context into log records, plus
#          helpers to open a run, time a stage and apply a dictConfig
# ==========================================================================================
# ==========================================================================================

_RUN_ID: ContextVar[str] = ContextVar("kernseq_run_id", default="-")
_STAGE: ContextVar[str] = ContextVar("kernseq_stage", default="-")


class RunContextFilter(logging.Filter):
    """Injects the active run context into LogRecord fields:
    - run_id: short correlation id set by :func:`run_context`
    - stage: pipeline stage name set by :func:`stage` (embed, kernel, tsne, ...)
    """

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = _RUN_ID.get()
        record.stage = _STAGE.get()
        return True


# ==========================================================================================
# ==========================================================================================


def current_run_context() -> dict[str, str]:
    """Return a safe, minimal context dict for structured reports."""
    return {"run_id": _RUN_ID.get(), "stage": _STAGE.get()}


# ------------------------------------------------------------------------------------------


@contextmanager
def run_context(run_id: str | None = None) -> Iterator[str]:
    """
    Open a pipeline run and bind a correlation id for every record logged inside it.

    Args:
        run_id: Explicit id to use.  A 12 character hex id is generated when omitted.

    Yields:
        The bound run id.
    """
    token = _RUN_ID.set(run_id or uuid.uuid4().hex[:12])
    try:
        yield _RUN_ID.get()
    finally:
        _RUN_ID.reset(token)


# ------------------------------------------------------------------------------------------


@contextmanager
def stage(name: str, logger: logging.Logger | None = None) -> Iterator[None]:
    """
    Mark a pipeline stage and log its wall time when the block exits.

    Args:
        name: Stage name written into the ``stage`` field of each record.
        logger: Logger for the timing line; defaults to ``kernseq.pipeline``.
    """
    log = logger or logging.getLogger("kernseq.pipeline")
    token = _STAGE.set(name)
    t0 = time.perf_counter()
    try:
        yield
    finally:
        log.info("stage %s finished in %dms", name, int((time.perf_counter() - t0) * 1000))
        _STAGE.reset(token)


# ------------------------------------------------------------------------------------------


def configure_logging(logging_cfg: dict[str, Any] | None) -> None:
    """
    Apply a ``logging.config.dictConfig`` mapping.

    Parent directories of file handlers are created first.  An empty or missing mapping
    leaves the logging configuration untouched.

    Args:
        logging_cfg: The ``"logging"`` section of the kernseq configuration.
    """
    if not logging_cfg:
        return
    for handler in logging_cfg.get("handlers", {}).values():
        filename = handler.get("filename")
        if filename:
            os.makedirs(Path(filename).parent, exist_ok=True)
    logging.config.dictConfig(logging_cfg)


# ==========================================================================================
# ==========================================================================================
# eof
