import logging
import os
from typing import Optional

DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def resolve_level(level: Optional[int] = None) -> int:
    """The explicit level, else the `LOG_LEVEL` environment variable, else INFO."""
    if level is not None:
        return level
    resolved = logging.getLevelName(os.getenv("LOG_LEVEL", "INFO").upper())
    return resolved if isinstance(resolved, int) else logging.INFO


def get_console_logger(
    name, level: Optional[int] = None, log_format: Optional[str] = None
) -> logging.Logger:
    """
    Get a console logger that writes to stderr.

    Stage functions call this on every invocation, so a `LOG_LEVEL` change made by the CLI after the
    logger was first created still applies to its handler.

    Args:
        name: The name of the logger.
        level: The logging level. Default is taken from `LOG_LEVEL`, or INFO.
        log_format: The logging format. Default is DEFAULT_LOG_FORMAT.

    Returns:
        logging.Logger: The logger object.
    """
    level = resolve_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(level)
    if not logger.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter(log_format or DEFAULT_LOG_FORMAT))
        logger.addHandler(console_handler)
    for handler in logger.handlers:
        handler.setLevel(level)
    return logger
