"""
Smearing and noise-transition matrices.

A smearing matrix M turns the per-class loss vector into the smeared loss
``e_y^T M l(f)``. Standard training, label smoothing and backward correction
are all special cases; forward correction is carried as a tag whose action
lives in the losses module because it transforms predictions, not losses.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

import config
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    SingularMatrixError,
    ValidationError,
    ensure,
    validate_num_classes,
    validate_probability_vector,
    validate_unit_interval,
)

logger = get_logger(__name__)

ROW_SUM_TOL = 1e-12
CONDITION_LIMIT = 1e12


class SmearingMethod(str, Enum):
    STANDARD = "standard"
    SMOOTHING = "smoothing"
    BACKWARD = "backward"
    FORWARD = "forward"


def _frozen(entries: Any) -> np.ndarray:
    arr = np.array(entries, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _check_square(entries: np.ndarray) -> None:
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got shape {entries.shape}")
    ensure(validate_num_classes(entries.shape[0], config.MAX_CLASSES), "invalid-L")


def _check_row_sums(entries: np.ndarray, tol: float) -> None:
    deviation = float(np.max(np.abs(entries.sum(axis=1) - 1.0)))
    if deviation > tol:
        raise ValidationError(
            f"rows must sum to 1 (max deviation {deviation:.3e} > {tol:.1e})",
            code="invalid-matrix",
        )


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """
    Row-stochastic noise matrix T: a clean label y is observed as y' with
    probability T[y, y'].

    Attributes:
        entries: L×L probabilities (read-only)
        rho: Flip probability when built by the symmetric construction
    """

    entries: np.ndarray
    rho: Optional[float] = None

    def __post_init__(self) -> None:
        entries = _frozen(self.entries)
        object.__setattr__(self, "entries", entries)
        _check_square(entries)
        if not np.all(np.isfinite(entries)) or entries.min() < 0.0 or entries.max() > 1.0:
            raise ValidationError("transition entries must lie in [0, 1]", code="invalid-matrix")
        _check_row_sums(entries, ROW_SUM_TOL)

    @property
    def num_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def is_symmetric(self) -> bool:
        return self.rho is not None

    @property
    def alpha(self) -> Optional[float]:
        """Smearing-side alpha = L/(L-1)·rho of a symmetric construction."""
        if self.rho is None:
            return None
        L = self.num_classes
        return L / (L - 1) * self.rho

    def to_rows(self) -> List[List[float]]:
        return self.entries.tolist()

    def __repr__(self) -> str:
        kind = f"symmetric rho={self.rho}" if self.is_symmetric else "general"
        return f"TransitionMatrix(L={self.num_classes}, {kind})"


@dataclass(frozen=True, eq=False)
class SmearingMatrix:
    """
    L×L smearing matrix M with the method that built it.

    Entries may be negative (backward correction). ``alpha`` is None for the
    inverse of a general, non-symmetric transition matrix.
    """

    entries: np.ndarray
    method: SmearingMethod
    alpha: Optional[float] = 0.0
    row_sum_tol: float = field(default=ROW_SUM_TOL, repr=False)

    def __post_init__(self) -> None:
        entries = _frozen(self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "method", SmearingMethod(self.method))
        _check_square(entries)
        if not np.all(np.isfinite(entries)):
            raise ValidationError("smearing entries must be finite", code="invalid-matrix")
        _check_row_sums(entries, self.row_sum_tol)

    @property
    def num_classes(self) -> int:
        return self.entries.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "alpha": self.alpha,
            "entries": self.entries.tolist(),
        }

    def __repr__(self) -> str:
        return f"SmearingMatrix(L={self.num_classes}, method={self.method.value}, alpha={self.alpha})"


def _uniform_mixture(L: int, alpha: float) -> np.ndarray:
    """(1 − α)·I + (α/L)·J"""
    return (1.0 - alpha) * np.eye(L) + (alpha / L) * np.ones((L, L))


def identity_transition(L: int) -> TransitionMatrix:
    ensure(validate_num_classes(L, config.MAX_CLASSES), "invalid-L")
    return TransitionMatrix(np.eye(L), rho=0.0)


def make_standard_matrix(L: int) -> SmearingMatrix:
    ensure(validate_num_classes(L, config.MAX_CLASSES), "invalid-L")
    return SmearingMatrix(np.eye(L), SmearingMethod.STANDARD, alpha=0.0)


def make_smoothing_matrix(L: int, alpha: float) -> SmearingMatrix:
    """
    Label smoothing as a smearing matrix.

    Args:
        L: Class count (≥ 2)
        alpha: Smoothing strength in [0, 1]

    Returns:
        (1 − α)·I + (α/L)·J tagged ``smoothing``

    Raises:
        ValidationError: invalid-alpha / invalid-L
    """
    ensure(validate_num_classes(L, config.MAX_CLASSES), "invalid-L")
    ensure(validate_unit_interval(alpha, "alpha"), "invalid-alpha")
    alpha = float(alpha)
    return SmearingMatrix(_uniform_mixture(L, alpha), SmearingMethod.SMOOTHING, alpha=alpha)


def make_symmetric_transition(L: int, rho: float) -> TransitionMatrix:
    """
    Symmetric label noise: each label flips with probability rho, uniformly
    to one of the other L − 1 classes.

    Returns:
        (1 − α)·I + (α/L)·J with α = L/(L−1)·rho

    Raises:
        ValidationError: invalid-rho if rho < 0 or rho ≥ 1 − 1/L
    """
    ensure(validate_num_classes(L, config.MAX_CLASSES), "invalid-L")
    try:
        rho = float(rho)
    except (TypeError, ValueError):
        raise ValidationError("rho must be a valid number", code="invalid-rho")
    if not np.isfinite(rho) or rho < 0.0 or rho >= 1.0 - 1.0 / L:
        raise ValidationError(f"rho must lie in [0, {1.0 - 1.0 / L}), got {rho}", code="invalid-rho")
    alpha = L / (L - 1) * rho
    return TransitionMatrix(_uniform_mixture(L, alpha), rho=rho)


def transition_from_alpha(L: int, alpha: float) -> TransitionMatrix:
    """Symmetric transition written directly in its smearing-side alpha."""
    ensure(validate_unit_interval(alpha, "alpha", upper_open=True), "invalid-alpha")
    return make_symmetric_transition(L, float(alpha) * (L - 1) / L)


def make_backward_matrix(T: TransitionMatrix) -> SmearingMatrix:
    """
    Backward correction matrix M = T⁻¹.

    Symmetric transitions use the closed form (1/(1−α))·(I − (α/L)·J);
    anything else is inverted densely behind a condition-number guard.

    Raises:
        SingularMatrixError: if cond(T) exceeds 1e12
    """
    entries = T.entries
    cond = float(np.linalg.cond(entries))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularMatrixError(f"transition matrix is numerically singular (cond={cond:.3e})")

    L = T.num_classes
    if T.is_symmetric:
        alpha = float(T.alpha)
        inverse = (np.eye(L) - (alpha / L) * np.ones((L, L))) / (1.0 - alpha)
        return SmearingMatrix(inverse, SmearingMethod.BACKWARD, alpha=alpha)

    inverse = np.linalg.inv(entries)
    # T·1 = 1 implies T⁻¹·1 = 1; rounding grows with the conditioning
    tol = max(ROW_SUM_TOL, 16.0 * np.finfo(np.float64).eps * cond * L)
    logger.debug(f"Inverted general transition matrix (L={L}, cond={cond:.3e})")
    return SmearingMatrix(inverse, SmearingMethod.BACKWARD, alpha=None, row_sum_tol=tol)


def make_forward_matrix(T: TransitionMatrix) -> SmearingMatrix:
    """Forward-correction tag; the entries are T itself."""
    return SmearingMatrix(T.entries, SmearingMethod.FORWARD, alpha=T.alpha)


def smear_distribution(M: SmearingMatrix, p: np.ndarray) -> np.ndarray:
    """
    Smeared distribution Mᵀp.

    For smoothing this is (1−α)·p + α/L; for the backward matrix of T applied
    to Tᵀp* it recovers p*.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] != M.num_classes:
        raise DimensionMismatchError(
            f"distribution length {p.shape} does not match L={M.num_classes}"
        )
    ensure(validate_probability_vector(p), "invalid-distribution")
    return M.entries.T @ p


def argmax_label(p: np.ndarray) -> int:
    """Index of the largest entry; ties go to the lowest index."""
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        raise ValidationError("cannot take argmax of an empty vector", code="empty-input")
    return int(np.argmax(p))
