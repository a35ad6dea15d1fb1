import logging
import sys

LOGGER_ROOT = "brakkelab"


def get_logger(name: str, level: int = logging.INFO) -> logging.Logger:
    """
    Initializes and returns a logger instance under the brakkelab namespace.
    """
    if not name.startswith(LOGGER_ROOT):
        name = f"{LOGGER_ROOT}.{name}"
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid adding multiple handlers if logger already has them
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        handler.setFormatter(formatter)
        logger.addHandler(handler)

    return logger


def set_level(level: int) -> None:
    """Sets the level on every brakkelab logger created so far (used by --verbose/--quiet)."""
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith(LOGGER_ROOT) and isinstance(logger, logging.Logger):
            logger.setLevel(level)
