"""
Input validation utilities and the toolkit's exception types.
"""
from typing import Any, Optional, Sequence, Tuple

import numpy as np

Check = Tuple[bool, Optional[str]]


class ValidationError(ValueError):
    """Raised when an input fails validation."""

    default_code = "invalid-input"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.code = code or self.default_code


class DimensionMismatchError(ValidationError):
    default_code = "dimension-mismatch"


class SingularMatrixError(ValidationError):
    default_code = "singular-matrix"


class EmptyInputError(ValidationError):
    default_code = "empty-input"


class MissingLabelsError(ValidationError):
    default_code = "missing-labels"


class DegenerateGeometryError(ValidationError):
    default_code = "degenerate-basis"


class ConfigError(ValidationError):
    default_code = "config-parse-error"


class DivergenceError(RuntimeError):
    """Raised when the training objective stops being finite or blows up."""

    def __init__(self, message: str, epoch: int, loss: float):
        super().__init__(message)
        self.code = "divergence-detected"
        self.epoch = epoch
        self.loss = loss


def ensure(check: Check, code: str, error: type = ValidationError) -> None:
    """Raise ``error`` with ``code`` when a validator reported a failure."""
    is_valid, error_msg = check
    if not is_valid:
        raise error(error_msg or "invalid input", code=code)


def validate_unit_interval(value: Any, name: str, upper_open: bool = False) -> Check:
    """
    Validate a real number in [0, 1] (or [0, 1) with ``upper_open``).

    Returns:
        (is_valid, error_message)
    """
    try:
        val = float(value)
    except (TypeError, ValueError):
        return False, f"{name} must be a valid number"

    if not np.isfinite(val):
        return False, f"{name} must be finite"
    if val < 0.0:
        return False, f"{name} must be non-negative, got {val}"
    if upper_open and val >= 1.0:
        return False, f"{name} must be below 1, got {val}"
    if val > 1.0:
        return False, f"{name} must be at most 1, got {val}"

    return True, None


def validate_num_classes(value: Any, max_classes: int) -> Check:
    """Validate a class count L."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        return False, "class count must be an integer"
    if value < 2:
        return False, f"class count must be at least 2, got {value}"
    if value > max_classes:
        return False, f"class count must be at most {max_classes}, got {value}"
    return True, None


def validate_class_index(index: Any, num_classes: int) -> Check:
    """Validate a label y in [0, L)."""
    if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
        return False, "class index must be an integer"
    if not 0 <= index < num_classes:
        return False, f"class index {index} outside [0, {num_classes})"
    return True, None


def validate_probability_vector(p: np.ndarray, tol: float = 1e-9) -> Check:
    """Validate a probability vector (non-negative, sums to one)."""
    if p.ndim != 1 or p.size == 0:
        return False, "probability vector must be a non-empty 1-D array"
    if np.any(p < 0.0):
        return False, "probability vector has negative entries"
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        return False, f"probability vector sums to {total}, not 1"
    return True, None


def validate_labels(labels: np.ndarray, num_classes: int, name: str = "labels") -> Check:
    """Validate an integer label array against the class count."""
    if labels.ndim != 1:
        return False, f"{name} must be a 1-D array"
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        return False, f"{name} must lie in [0, {num_classes})"
    return True, None


def validate_positive(value: Any, name: str) -> Check:
    """Validate a strictly positive real number."""
    try:
        val = float(value)
    except (TypeError, ValueError):
        return False, f"{name} must be a valid number"
    if not np.isfinite(val) or val <= 0.0:
        return False, f"{name} must be positive, got {value}"
    return True, None


def validate_same_length(arrays: Sequence[np.ndarray], names: Sequence[str]) -> Check:
    """Validate that several arrays share their first dimension."""
    lengths = {name: len(arr) for arr, name in zip(arrays, names)}
    if len(set(lengths.values())) > 1:
        return False, f"length mismatch: {lengths}"
    return True, None
