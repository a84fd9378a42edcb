"""Utility functions and helpers."""
from .logger import setup_logger, get_logger, get_run_logger, init_worker_logging
from .validators import (
    ValidationError,
    DimensionMismatchError,
    SingularMatrixError,
    EmptyInputError,
    MissingLabelsError,
    DegenerateGeometryError,
    ConfigError,
    DivergenceError,
    ensure,
)

__all__ = [
    "setup_logger",
    "get_logger",
    "get_run_logger",
    "init_worker_logging",
    "ValidationError",
    "DimensionMismatchError",
    "SingularMatrixError",
    "EmptyInputError",
    "MissingLabelsError",
    "DegenerateGeometryError",
    "ConfigError",
    "DivergenceError",
    "ensure",
]
