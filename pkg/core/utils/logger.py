"""
Logging utility for AMOS-VPR

Console records go to stderr; stdout carries only the key=value summary lines
printed by the CLI. Modules call ``setup_logger(__name__)`` at import time,
which installs the default sinks once. Passing a level (the CLI does, from the
``logging`` config section) replaces the sinks.
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

_configured = False


def _to_stderr(message: str):
    # resolved per record so a swapped sys.stderr (test runners) is honoured
    sys.stderr.write(message)


def configure_sinks(level: str = "INFO", log_file: Optional[str] = None):
    """Replace every sink with a stderr console sink and an optional rotating file"""
    global _configured
    logger.remove()
    logger.add(_to_stderr, format=CONSOLE_FORMAT, level=level, colorize=sys.stderr.isatty())

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_file,
            format=FILE_FORMAT,
            level=level,
            rotation="10 MB",
            retention="30 days",
            compression="zip"
        )
    _configured = True


def setup_logger(name: str, level: Optional[str] = None, log_file: Optional[str] = None):
    """Logger bound to a module name; a level (or file) reconfigures the sinks"""
    if level is not None or log_file is not None or not _configured:
        configure_sinks(level or "INFO", log_file)
    return logger.bind(name=name)
