# core/logger.py

import logging
import os

from rich.console import Console
from rich.logging import RichHandler

_ROOT = "splitrx"
_configured = False


def setup_logging(level: str = "INFO") -> None:
    """Attach a rich console handler to the package logger (idempotent)."""
    global _configured
    level = os.getenv("SPLITRX_LOG_LEVEL", level).upper()
    logger = logging.getLogger(_ROOT)
    logger.setLevel(level)
    if not _configured:
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True, log_time_format="%H:%M:%S")
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
        logger.propagate = False
        _configured = True


def get_logger(name: str) -> logging.Logger:
    short = name.rsplit(".", 1)[-1]
    return logging.getLogger(f"{_ROOT}.{short}")


def log(stage: str, msg: str, level: int = logging.INFO) -> None:
    """Stage-tagged console log, e.g. log("run", "fig7 finished")."""
    logging.getLogger(f"{_ROOT}.{stage}").log(level, f"[{stage}] {msg}")
