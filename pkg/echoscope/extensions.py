"""
extensions.py

Process-wide objects shared by the echoscope modules (logging setup, the
random generator factory), kept here so they can be imported anywhere without
circular imports.
"""

from __future__ import annotations

import logging

import numpy as np

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# package logger, every module logs below it through logging.getLogger(__name__)
logger = logging.getLogger("echoscope")


def configure_logging(level: str | int = "INFO") -> logging.Logger:
    """Attach a single stream handler to the package logger.

    Calling it again only updates the level.

    Args:
        level: logging level name or number.

    Returns:
        logging.Logger: the ``echoscope`` logger.
    """
    if isinstance(level, str):
        level = level.upper()
    logger.setLevel(level)
    if not any(getattr(h, "_echoscope", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._echoscope = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    return logger


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based (Philox) generator: the same seed gives the same stream
    on every platform."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(root: int, *keys: int) -> int:
    """Independent child seed of ``root`` for the work item ``keys``."""
    sequence = np.random.SeedSequence(root, spawn_key=keys)
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
