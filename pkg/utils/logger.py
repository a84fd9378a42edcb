"""
Logging configuration and utilities.
"""
import logging
import sys
from pathlib import Path
from typing import Any, List, MutableMapping, Optional, Tuple

import config

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# Libraries that log at INFO on every pool start-up
_QUIET_LOGGERS = ('concurrent.futures', 'asyncio')


def _level(level: Optional[str]) -> int:
    return getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO)


def _handlers(log_level: int, log_file: Optional[Path]) -> List[logging.Handler]:
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    handlers: List[logging.Handler] = [console_handler]

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)
    return handlers


def setup_logger(log_file: Optional[Path] = None, level: Optional[str] = None):
    """
    Setup application-wide logging configuration.

    Python warnings (numpy overflow / divide warnings included) are routed
    through the ``py.warnings`` logger so they land in the same handlers.
    """
    log_level = _level(level)
    logging.basicConfig(
        level=log_level,
        handlers=_handlers(log_level, log_file or config.LOG_FILE),
        force=True,
    )
    logging.captureWarnings(True)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def init_worker_logging(level: str) -> None:
    """
    Process-pool initializer: workers started with ``spawn`` have no
    handlers, so configure a console-only root logger at the parent's level.
    """
    setup_logger(log_file=None, level=level)


def current_level_name() -> str:
    return logging.getLevelName(logging.getLogger().getEffectiveLevel())


class RunLoggerAdapter(logging.LoggerAdapter):
    """Prefixes every message with the grid point it belongs to."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        extra = self.extra or {}
        return f"[{extra.get('method', '?')} seed={extra.get('seed', '?')}] {msg}", kwargs


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a module."""
    return logging.getLogger(name)


def get_run_logger(name: str, method: str, seed: int) -> RunLoggerAdapter:
    """Logger for one (method, seed) grid point."""
    return RunLoggerAdapter(logging.getLogger(name), {'method': method, 'seed': seed})
