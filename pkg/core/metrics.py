"""
Run diagnostics: accuracy on the clean and noisy parts of the training set,
expected calibration error, confidence-gap samples and pre-logit
projections.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import ks_2samp

from .dataset import LabeledDataset
from .losses import softmax
from .models import MlpModel, Model
from utils.logger import get_logger
from utils.validators import (
    DegenerateGeometryError,
    DimensionMismatchError,
    EmptyInputError,
    MissingLabelsError,
    ValidationError,
    ensure,
    validate_labels,
)

logger = get_logger(__name__)

DEFAULT_ECE_BINS = 100
BASIS_TOL = 1e-10
LABEL_SOURCES = ("observed", "clean", "max")

REPORT_FIELDS = [
    "method",
    "alpha",
    "seed",
    "status",
    "test_accuracy",
    "train_accuracy_full_true",
    "train_accuracy_clean_true",
    "train_accuracy_noisy_true",
    "train_accuracy_noisy_observed",
    "ece",
]


@dataclass
class RunReport:
    """
    Metrics bundle for one trained model.

    Accuracies over an empty part (e.g. the noisy part at rho=0) are None.
    """

    method: str = ""
    alpha: Optional[float] = None
    seed: int = 0
    status: str = "ok"
    test_accuracy: Optional[float] = None
    train_accuracy_full_true: Optional[float] = None
    train_accuracy_clean_true: Optional[float] = None
    train_accuracy_noisy_true: Optional[float] = None
    train_accuracy_noisy_observed: Optional[float] = None
    ece: Optional[float] = None
    gap_samples: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for name in REPORT_FIELDS[4:]:
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def diverged(cls, method: str, alpha: Optional[float], seed: int) -> RunReport:
        return cls(method=method, alpha=alpha, seed=seed, status="diverged")

    def to_row(self) -> List[Any]:
        return [getattr(self, name) for name in REPORT_FIELDS]

    def to_dict(self) -> Dict[str, Any]:
        return dict(zip(REPORT_FIELDS, self.to_row()))


# ========== Predictions ==========

def predict_proba(model: Model, features: np.ndarray) -> np.ndarray:
    return softmax(model.logits(features))


def predict(model: Model, features: np.ndarray) -> np.ndarray:
    """Arg-max class per example; ties go to the lowest index."""
    return np.argmax(model.logits(features), axis=1)


def _mean_or_none(hits: np.ndarray) -> Optional[float]:
    return float(hits.mean()) if hits.size else None


# ========== Accuracy breakdown ==========

def breakdown_from_predictions(predictions: np.ndarray, data: LabeledDataset) -> Dict[str, Optional[float]]:
    """
    Accuracies vs the true labels on the full set and its clean/noisy parts,
    and vs the observed labels on the noisy part.

    Raises:
        MissingLabelsError: missing-clean-labels
    """
    clean = data.require_clean()
    predictions = np.asarray(predictions)
    if predictions.shape != clean.shape:
        raise DimensionMismatchError("one prediction per example is required")
    noisy = data.noise_mask
    correct = predictions == clean
    return {
        "train_accuracy_full_true": _mean_or_none(correct),
        "train_accuracy_clean_true": _mean_or_none(correct[~noisy]),
        "train_accuracy_noisy_true": _mean_or_none(correct[noisy]),
        "train_accuracy_noisy_observed": _mean_or_none(
            predictions[noisy] == data.observed_labels[noisy]
        ),
    }


def breakdown_accuracy(model: Model, data: LabeledDataset) -> RunReport:
    """Accuracy fields of a RunReport for a model on a noisy training set."""
    return RunReport(**breakdown_from_predictions(predict(model, data.features), data))


# ========== Calibration ==========

def ece(probs: np.ndarray, labels: np.ndarray, bins: int = DEFAULT_ECE_BINS) -> float:
    """
    Expected calibration error over equal-width confidence bins.

    Bin i (1-based) holds confidences in ((i−1)/B, i/B]; confidence is the
    max class probability and a prediction is its arg-max.

    Raises:
        EmptyInputError: if there are no examples
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise EmptyInputError("ECE needs a non-empty N×L probability matrix")
    if labels.shape != (probs.shape[0],):
        raise DimensionMismatchError("one label per probability row is required")
    if isinstance(bins, bool) or int(bins) != bins or bins < 1:
        raise ValidationError(f"bins must be a positive integer, got {bins}", code="invalid-bins")
    if np.max(np.abs(probs.sum(axis=1) - 1.0)) > 1e-6:
        raise ValidationError("probability rows must sum to 1", code="invalid-distribution")

    bins = int(bins)
    confidence = probs.max(axis=1)
    correct = (np.argmax(probs, axis=1) == labels).astype(np.float64)
    index = np.clip(np.ceil(confidence * bins).astype(np.int64) - 1, 0, bins - 1)

    conf_sum = np.bincount(index, weights=confidence, minlength=bins)
    hit_sum = np.bincount(index, weights=correct, minlength=bins)
    return float(np.sum(np.abs(hit_sum - conf_sum)) / probs.shape[0])


# ========== Confidence gaps ==========

def logit_gap_samples(
    model: Model,
    data: LabeledDataset,
    label_source: str = "observed",
    use_logits: bool = False,
) -> np.ndarray:
    """
    Per-example gap between the score of a label and the mean score.

    Scores are softmax probabilities unless ``use_logits`` is set.

    Args:
        label_source: ``observed``, ``clean`` or ``max`` (the top-scoring class)

    Raises:
        MissingLabelsError: if clean labels are requested but absent
    """
    if label_source not in LABEL_SOURCES:
        raise ValidationError(f"label_source must be one of {LABEL_SOURCES}, got {label_source!r}")
    logits = model.logits(data.features)
    scores = logits if use_logits else softmax(logits)

    if label_source == "observed":
        labels = data.observed_labels
    elif label_source == "clean":
        if data.clean_labels is None:
            raise MissingLabelsError("dataset has no clean labels")
        labels = data.clean_labels
    else:
        labels = np.argmax(scores, axis=1)

    picked = scores[np.arange(scores.shape[0]), labels]
    return picked - scores.mean(axis=1)


def gap_samples_by_split(model: Model, data: LabeledDataset,
                         use_logits: bool = False) -> Dict[str, np.ndarray]:
    """Gap samples keyed ``<split>_<label source>`` for split in clean/noisy."""
    data.require_clean()
    samples: Dict[str, np.ndarray] = {}
    for source in ("observed", "clean"):
        gaps = logit_gap_samples(model, data, source, use_logits)
        samples[f"clean_{source}"] = gaps[~data.noise_mask]
        samples[f"noisy_{source}"] = gaps[data.noise_mask]
    return samples


@dataclass(frozen=True)
class GapShift:
    """How a candidate gap sample sits relative to a reference sample."""

    mean_difference: float
    smaller_statistic: float
    smaller_pvalue: float
    larger_statistic: float
    larger_pvalue: float


def gap_shift(candidate: Sequence[float], reference: Sequence[float]) -> GapShift:
    """
    Mean difference and one-sided two-sample KS tests.

    ``smaller_*`` tests whether candidate is stochastically smaller than
    reference (its CDF lies above), ``larger_*`` the converse.
    """
    candidate = np.asarray(candidate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if candidate.size == 0 or reference.size == 0:
        raise EmptyInputError("gap comparison needs two non-empty samples")
    smaller = ks_2samp(candidate, reference, alternative="greater")
    larger = ks_2samp(candidate, reference, alternative="less")
    return GapShift(
        mean_difference=float(candidate.mean() - reference.mean()),
        smaller_statistic=float(smaller.statistic),
        smaller_pvalue=float(smaller.pvalue),
        larger_statistic=float(larger.statistic),
        larger_pvalue=float(larger.pvalue),
    )


# ========== Pre-logit geometry ==========

def _template_basis(model: MlpModel, classes: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    if not isinstance(model, MlpModel):
        raise ValidationError("pre-logit projection needs an MLP model", code="invalid-model")
    a, b, c = (int(k) for k in classes)
    if len({a, b, c}) != 3:
        raise ValidationError(f"need three distinct classes, got {classes}", code="invalid-classes")
    ensure(validate_labels(np.array([a, b, c]), model.num_classes, "classes"), "index-out-of-range")

    templates = model.output_weights
    first = templates[b] - templates[a]
    second = templates[c] - templates[a]
    first_norm = np.linalg.norm(first)
    if first_norm < BASIS_TOL:
        raise DegenerateGeometryError("templates of the first two classes coincide")
    e1 = first / first_norm
    residual = second - (second @ e1) * e1
    residual_norm = np.linalg.norm(residual)
    if residual_norm < BASIS_TOL:
        raise DegenerateGeometryError("template differences are linearly dependent")
    e2 = residual / residual_norm
    center = templates[[a, b, c]].mean(axis=0)
    return np.vstack([e1, e2]), center


def project_prelogits(model: MlpModel, prelogits: np.ndarray, classes: Sequence[int]) -> np.ndarray:
    """Coordinates of raw H-vectors in the orthonormal template plane."""
    basis, center = _template_basis(model, classes)
    prelogits = np.asarray(prelogits, dtype=np.float64)
    if prelogits.ndim == 1:
        prelogits = prelogits[None, :]
    if prelogits.shape[1] != model.hidden_units:
        raise DimensionMismatchError(
            f"pre-logits must have {model.hidden_units} entries, got {prelogits.shape[1]}"
        )
    return (prelogits - center) @ basis.T


def prelogit_projection(
    model: MlpModel,
    data: LabeledDataset,
    classes: Sequence[int],
) -> List[Tuple[Tuple[float, float], bool]]:
    """
    Project the penultimate activations of every example whose true class is
    one of ``classes`` onto the plane of their output templates.

    Returns:
        List of ((u, v), noise flag)

    Raises:
        DegenerateGeometryError: degenerate-basis
    """
    basis, center = _template_basis(model, classes)
    selected = np.flatnonzero(np.isin(data.true_labels(), list(classes)))
    coords = (model.prelogits(data.features[selected]) - center) @ basis.T
    flags = (data.noise_mask[selected] if data.noise_mask is not None
             else np.zeros(selected.shape[0], dtype=bool))
    return [((float(u), float(v)), bool(flag)) for (u, v), flag in zip(coords, flags)]


def noisy_centroid_distance(points: np.ndarray, true_labels: np.ndarray,
                            noise_mask: np.ndarray) -> Optional[float]:
    """
    Mean distance from each noisy point to the centroid of the clean points
    of its true class; None when there is nothing to measure.
    """
    points = np.asarray(points, dtype=np.float64)
    true_labels = np.asarray(true_labels)
    noise_mask = np.asarray(noise_mask, dtype=bool)
    distances = []
    for label in np.unique(true_labels[noise_mask]):
        clean_points = points[(true_labels == label) & ~noise_mask]
        if clean_points.shape[0] == 0:
            continue
        centroid = clean_points.mean(axis=0)
        noisy_points = points[(true_labels == label) & noise_mask]
        distances.append(np.linalg.norm(noisy_points - centroid, axis=1))
    if not distances:
        return None
    return float(np.concatenate(distances).mean())


# ========== Full report ==========

def evaluate_run(
    model: Model,
    train_data: LabeledDataset,
    test_data: LabeledDataset,
    method: str = "",
    alpha: Optional[float] = None,
    seed: int = 0,
    bins: int = DEFAULT_ECE_BINS,
    with_gaps: bool = False,
) -> RunReport:
    """
    RunReport for a model trained on ``train_data`` and tested on the clean
    ``test_data``. A training set without noise bookkeeping counts as all
    clean.
    """
    test_labels = test_data.true_labels()
    test_probs = predict_proba(model, test_data.features)
    train_predictions = predict(model, train_data.features)

    if train_data.is_noisy and train_data.has_clean_labels:
        accuracies = breakdown_from_predictions(train_predictions, train_data)
        gaps = gap_samples_by_split(model, train_data) if with_gaps else None
    else:
        full = _mean_or_none(train_predictions == train_data.observed_labels)
        accuracies = {
            "train_accuracy_full_true": full,
            "train_accuracy_clean_true": full,
            "train_accuracy_noisy_true": None,
            "train_accuracy_noisy_observed": None,
        }
        gaps = None

    report = RunReport(
        method=method,
        alpha=alpha,
        seed=seed,
        test_accuracy=_mean_or_none(np.argmax(test_probs, axis=1) == test_labels),
        ece=ece(test_probs, test_labels, bins),
        gap_samples=gaps,
        **accuracies,
    )
    logger.info(
        f"{method or 'run'} seed={seed}: test_acc={report.test_accuracy:.4f} ece={report.ece:.4f}"
    )
    return report
