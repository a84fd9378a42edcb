"""
Closed-form views of smoothing as shrinkage.

Square-loss regression on smoothed targets has a closed form that is a
shrunk copy of the ordinary solution, and the smoothing regulariser Ω is
minimised by the all-zero linear model.
"""
from __future__ import annotations

import numpy as np

from .losses import omega_regulariser, softmax
from .matrices import CONDITION_LIMIT
from .models import LinearModel
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    EmptyInputError,
    SingularMatrixError,
    ensure,
    validate_unit_interval,
)

logger = get_logger(__name__)


def closed_form_smoothed_least_squares(X: np.ndarray, Y: np.ndarray, alpha: float) -> np.ndarray:
    """
    Least-squares weights for targets smoothed with strength alpha.

    W̄ = (1 − α)·W* + (α/L)·(XᵀX)⁻¹Xᵀ1·1ᵀ, where W* = (XᵀX)⁻¹XᵀY; for
    column-centred X the second term vanishes.

    Args:
        X: N×D design matrix
        Y: N×L one-hot targets
        alpha: Smoothing strength in [0, 1]

    Returns:
        L×D weight matrix

    Raises:
        SingularMatrixError: singular-design when cond(XᵀX) exceeds 1e12
    """
    ensure(validate_unit_interval(alpha, "alpha"), "invalid-alpha")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(f"X {X.shape} and Y {Y.shape} must share N rows")
    if X.shape[0] == 0:
        raise EmptyInputError("design matrix has no rows")

    gram = X.T @ X
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularMatrixError(f"XᵀX is numerically singular (cond={cond:.3e})",
                                  code="singular-design")

    L = Y.shape[1]
    ordinary = np.linalg.solve(gram, X.T @ Y)
    intercept = np.linalg.solve(gram, X.T @ np.ones(X.shape[0]))
    weights = (1.0 - alpha) * ordinary + (alpha / L) * np.outer(intercept, np.ones(L))
    return weights.T


def omega_value(model: LinearModel, features: np.ndarray) -> float:
    """Ω averaged over the feature sample."""
    return omega_regulariser(model.logits(features))


def omega_gradient_at(model: LinearModel, features: np.ndarray) -> np.ndarray:
    """
    ∂Ω/∂W for a linear model: row i is E_x[(L·softmax(f(x))_i − 1)·x].

    At W = 0 (and zero bias) every softmax is uniform, so the gradient is
    exactly zero whatever the features are.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("omega gradient needs a non-empty N×D feature sample")
    probs = softmax(model.logits(X))
    L = model.num_classes
    return (L * probs - 1.0).T @ X / X.shape[0]
