"""
Softmax cross-entropy and its smeared / corrected variants.

Per-example operations take a label and a logit vector; ``CompiledLoss``
evaluates the same quantities over a batch for training.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax as _softmax

from .matrices import (
    SmearingMatrix,
    SmearingMethod,
    TransitionMatrix,
    make_backward_matrix,
    make_forward_matrix,
    make_smoothing_matrix,
    make_standard_matrix,
)
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    ValidationError,
    ensure,
    validate_class_index,
    validate_unit_interval,
)

logger = get_logger(__name__)

LOG_CLAMP = 1e-300
DEFAULT_MARGIN_GRID = np.linspace(-10.0, 10.0, 401)


class LossKind(str, Enum):
    STANDARD = "standard"
    SMOOTHING = "smoothing"
    BACKWARD = "backward"
    FORWARD = "forward"


class _ClampCounter:
    """Counts forward-correction probabilities clamped before the log."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n: int) -> None:
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


_forward_clamps = _ClampCounter()


def clamp_count() -> int:
    return _forward_clamps.count


def reset_clamp_count() -> None:
    _forward_clamps.reset()


@dataclass(frozen=True, eq=False)
class LossSpec:
    """
    Which member of the smeared loss family to train with.

    Attributes:
        kind: standard / smoothing / backward / forward
        alpha: Smoothing strength, or the tuning alpha the transition was
            built from for backward/forward
        transition: Required for backward and forward correction
    """

    kind: LossKind = LossKind.STANDARD
    alpha: float = 0.0
    transition: Optional[TransitionMatrix] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LossKind(self.kind))
        ensure(validate_unit_interval(self.alpha, "alpha"), "invalid-alpha")
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.kind in (LossKind.BACKWARD, LossKind.FORWARD) and self.transition is None:
            raise ValidationError(
                f"{self.kind.value} correction requires a transition matrix",
                code="missing-transition",
            )

    @classmethod
    def standard(cls) -> LossSpec:
        return cls(LossKind.STANDARD)

    @classmethod
    def smoothing(cls, alpha: float) -> LossSpec:
        return cls(LossKind.SMOOTHING, alpha)

    @classmethod
    def backward(cls, transition: TransitionMatrix, alpha: Optional[float] = None) -> LossSpec:
        return cls(LossKind.BACKWARD, _transition_alpha(transition, alpha), transition)

    @classmethod
    def forward(cls, transition: TransitionMatrix, alpha: Optional[float] = None) -> LossSpec:
        return cls(LossKind.FORWARD, _transition_alpha(transition, alpha), transition)

    @property
    def label(self) -> str:
        if self.kind == LossKind.STANDARD:
            return "baseline"
        short = {LossKind.SMOOTHING: "LS", LossKind.BACKWARD: "BC", LossKind.FORWARD: "FC"}
        return f"{short[self.kind]}({self.alpha:g})"

    def check_classes(self, num_classes: int) -> None:
        if self.transition is not None and self.transition.num_classes != num_classes:
            raise DimensionMismatchError(
                f"transition has L={self.transition.num_classes}, data has L={num_classes}"
            )

    def smearing_matrix(self, num_classes: int) -> SmearingMatrix:
        """Precompute the matrix this spec smears with."""
        self.check_classes(num_classes)
        if self.kind == LossKind.STANDARD:
            return make_standard_matrix(num_classes)
        if self.kind == LossKind.SMOOTHING:
            return make_smoothing_matrix(num_classes, self.alpha)
        if self.kind == LossKind.BACKWARD:
            return make_backward_matrix(self.transition)
        return make_forward_matrix(self.transition)

    def __repr__(self) -> str:
        return f"LossSpec({self.label})"


def _transition_alpha(transition: TransitionMatrix, alpha: Optional[float]) -> float:
    if alpha is not None:
        return float(alpha)
    return float(transition.alpha) if transition.alpha is not None else 0.0


def _as_logits(f: Sequence[float]) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.size == 0:
        raise DimensionMismatchError("logits must be a non-empty 1-D vector")
    if not np.all(np.isfinite(f)):
        raise ValidationError("logits must be finite", code="invalid-logits")
    return f


def _check_label(y: int, L: int) -> None:
    ensure(validate_class_index(y, L), "index-out-of-range")


# ========== Elementary functions ==========

def softmax(f: Sequence[float]) -> np.ndarray:
    """Overflow-safe softmax over the last axis."""
    return _softmax(np.asarray(f, dtype=np.float64), axis=-1)


def log_softmax(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    return f - logsumexp(f, axis=-1, keepdims=True)


def per_class_losses(f: np.ndarray) -> np.ndarray:
    """[ce_loss(y', f)]_{y'} over the last axis."""
    return -log_softmax(f)


def ce_loss(y: int, f: Sequence[float]) -> float:
    """Softmax cross-entropy −f_y + log Σ exp(f)."""
    f = _as_logits(f)
    _check_label(y, f.shape[0])
    return float(logsumexp(f) - f[y])


def smoothed_label(y: int, L: int, alpha: float) -> np.ndarray:
    """(1 − α)·e_y + α/L"""
    ensure(validate_unit_interval(alpha, "alpha"), "invalid-alpha")
    _check_label(y, L)
    target = np.full(L, float(alpha) / L)
    target[y] += 1.0 - float(alpha)
    return target


def smeared_loss(M: SmearingMatrix, y: int, f: Sequence[float]) -> float:
    """e_yᵀ M ℓ(f); negative values are possible for backward correction."""
    f = _as_logits(f)
    if M.num_classes != f.shape[0]:
        raise DimensionMismatchError(f"matrix L={M.num_classes} vs logits L={f.shape[0]}")
    _check_label(y, f.shape[0])
    return float(M.entries[y] @ per_class_losses(f))


def forward_loss(T: TransitionMatrix, y: int, f: Sequence[float]) -> float:
    """
    Forward-corrected loss −log((Tᵀ softmax(f))_y).

    The corrected probability is clamped at 1e-300 before the log; each clamp
    is counted (see ``clamp_count``) instead of raising mid-training.
    """
    f = _as_logits(f)
    if T.num_classes != f.shape[0]:
        raise DimensionMismatchError(f"transition L={T.num_classes} vs logits L={f.shape[0]}")
    _check_label(y, f.shape[0])
    q = float(T.entries[:, y] @ softmax(f))
    if q < LOG_CLAMP:
        _forward_clamps.add(1)
        logger.warning(f"Forward-corrected probability {q:.3e} clamped for label {y}")
        q = LOG_CLAMP
    return float(-np.log(q))


def loss_value(spec: LossSpec, y: int, f: Sequence[float]) -> float:
    """Value of whichever loss ``spec`` selects."""
    f = _as_logits(f)
    if spec.kind == LossKind.FORWARD:
        return forward_loss(spec.transition, y, f)
    return smeared_loss(spec.smearing_matrix(f.shape[0]), y, f)


def grad_logits(spec: LossSpec, y: int, f: Sequence[float]) -> np.ndarray:
    """
    Exact gradient of the selected loss with respect to the logits.

    standard:  softmax(f) − e_y
    smoothing: softmax(f) − smoothed_label(y, L, α)
    backward:  (Σ_k M[y,k])·softmax(f) − M[y, :]
    forward:   softmax(f) − T[:, y] ⊙ softmax(f) / (Tᵀ softmax(f))_y
    """
    f = _as_logits(f)
    L = f.shape[0]
    _check_label(y, L)
    compiled = CompiledLoss(spec, L)
    return compiled.gradients(np.array([y]), f[None, :])[0]


def omega_regulariser(f_batch: Iterable[Sequence[float]]) -> float:
    """
    Smoothing regulariser Ω: batch mean of L·logΣexp(f) − Σ f.

    Invariant to shifting any logit vector by a constant.
    """
    F = np.asarray(list(f_batch) if not isinstance(f_batch, np.ndarray) else f_batch,
                   dtype=np.float64)
    if F.ndim != 2 or F.shape[0] == 0:
        raise ValidationError("omega needs a non-empty batch of logit vectors", code="empty-input")
    L = F.shape[1]
    return float(np.mean(L * logsumexp(F, axis=1) - F.sum(axis=1)))


# ========== Batched evaluation ==========

class CompiledLoss:
    """
    A LossSpec bound to a class count, evaluated over batches.

    Smearing matrices are built once here rather than per example.
    """

    def __init__(self, spec: LossSpec, num_classes: int) -> None:
        spec.check_classes(num_classes)
        self.spec = spec
        self.num_classes = num_classes
        self.matrix = spec.smearing_matrix(num_classes)
        self._row_sums = self.matrix.entries.sum(axis=1)

    @property
    def is_forward(self) -> bool:
        return self.matrix.method == SmearingMethod.FORWARD

    def _check(self, labels: np.ndarray, logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        labels = np.asarray(labels, dtype=np.int64)
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 2 or logits.shape[1] != self.num_classes:
            raise DimensionMismatchError(
                f"logits shape {logits.shape} does not match L={self.num_classes}"
            )
        if labels.shape != (logits.shape[0],):
            raise DimensionMismatchError("one label per logit row is required")
        return labels, logits

    def _forward_probabilities(self, labels: np.ndarray, probs: np.ndarray) -> np.ndarray:
        # column y of T for every example
        columns = self.matrix.entries.T[labels]
        q = np.einsum("nk,nk->n", columns, probs)
        clamped = q < LOG_CLAMP
        if np.any(clamped):
            count = int(clamped.sum())
            _forward_clamps.add(count)
            logger.warning(f"{count} forward-corrected probabilities clamped at {LOG_CLAMP}")
            q = np.where(clamped, LOG_CLAMP, q)
        return q

    def _smeared_values(self, labels: np.ndarray, logits: np.ndarray) -> np.ndarray:
        rows = self.matrix.entries[labels]
        return np.einsum("nk,nk->n", rows, per_class_losses(logits))

    def _smeared_gradients(self, labels: np.ndarray, probs: np.ndarray) -> np.ndarray:
        rows = self.matrix.entries[labels]
        return self._row_sums[labels][:, None] * probs - rows

    def _forward_gradients(self, labels: np.ndarray, probs: np.ndarray, q: np.ndarray) -> np.ndarray:
        columns = self.matrix.entries.T[labels]
        return probs - columns * probs / q[:, None]

    def values(self, labels: np.ndarray, logits: np.ndarray) -> np.ndarray:
        labels, logits = self._check(labels, logits)
        if self.is_forward:
            q = self._forward_probabilities(labels, softmax(logits))
            return -np.log(q)
        return self._smeared_values(labels, logits)

    def gradients(self, labels: np.ndarray, logits: np.ndarray) -> np.ndarray:
        labels, logits = self._check(labels, logits)
        probs = softmax(logits)
        if self.is_forward:
            return self._forward_gradients(labels, probs, self._forward_probabilities(labels, probs))
        return self._smeared_gradients(labels, probs)

    def values_and_gradients(self, labels: np.ndarray, logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Both at once; the forward-corrected probability is computed (and clamped) a single time."""
        labels, logits = self._check(labels, logits)
        probs = softmax(logits)
        if self.is_forward:
            q = self._forward_probabilities(labels, probs)
            return -np.log(q), self._forward_gradients(labels, probs, q)
        return self._smeared_values(labels, logits), self._smeared_gradients(labels, probs)


def loss_curve(spec: LossSpec, y: int, margin_grid: Optional[Sequence[float]] = None) -> List[Tuple[float, float]]:
    """
    Sample a binary loss along logits f = [m, 0].

    Args:
        spec: Loss to sample (transition, if any, must be 2×2)
        y: Label, 0 or 1
        margin_grid: Margins; defaults to 401 points over [-10, 10]

    Returns:
        List of (margin, loss)
    """
    grid = DEFAULT_MARGIN_GRID if margin_grid is None else np.asarray(margin_grid, dtype=np.float64)
    _check_label(y, 2)
    compiled = CompiledLoss(spec, 2)
    logits = np.column_stack([grid, np.zeros_like(grid)])
    values = compiled.values(np.full(grid.shape[0], y), logits)
    return [(float(m), float(v)) for m, v in zip(grid, values)]
