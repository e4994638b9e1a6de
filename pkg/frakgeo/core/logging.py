import logging
from typing import Optional

_ROOT = "frakgeo"

_logger = logging.getLogger(_ROOT)
if not _logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
    _logger.addHandler(_handler)
    _logger.setLevel(logging.WARNING)


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Child logger of the package logger, e.g. ``get_logger("caputo")`` -> ``frakgeo.caputo``."""
    if not name:
        return _logger
    if name.startswith(_ROOT + "."):
        name = name[len(_ROOT) + 1:]
    return _logger.getChild(name)


def configure_logging(level: str) -> None:
    _logger.setLevel(level.upper())
