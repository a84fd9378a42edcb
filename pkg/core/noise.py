"""
Synthetic label noise injection and transition-matrix estimation.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .dataset import LabeledDataset
from .matrices import TransitionMatrix
from .rng import example_uniforms
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    EmptyInputError,
    ValidationError,
)

logger = get_logger(__name__)

PROBABILITY_ROW_TOL = 1e-6


class InjectionMode(str, Enum):
    RESAMPLE_ANY = "resample-any"
    FLIP_TO_OTHER = "flip-to-other"


def _require_pristine(data: LabeledDataset) -> None:
    if data.noise_mask is not None:
        raise ValidationError("dataset already carries injected noise", code="already-noisy")


def inject_symmetric(
    data: LabeledDataset,
    rho: float,
    mode: InjectionMode = InjectionMode.RESAMPLE_ANY,
    seed: int = 0,
) -> LabeledDataset:
    """
    Symmetric label noise.

    Each example is selected independently with probability ``rho``. A
    selected label is redrawn uniformly from all L classes (resample-any, it
    may come back unchanged) or from the other L − 1 classes (flip-to-other).

    Raises:
        ValidationError: invalid-rho
    """
    _require_pristine(data)
    mode = InjectionMode(mode)
    L = data.num_classes
    rho = float(rho)
    upper = 1.0 if mode == InjectionMode.RESAMPLE_ANY else 1.0 - 1.0 / L
    if not np.isfinite(rho) or rho < 0.0 or rho >= upper:
        raise ValidationError(f"rho must lie in [0, {upper}) for {mode.value}, got {rho}",
                              code="invalid-rho")

    clean = data.observed_labels
    u = example_uniforms(seed, f"inject-symmetric/{mode.value}", data.num_examples)
    selected = u[:, 0] < rho

    if mode == InjectionMode.RESAMPLE_ANY:
        redrawn = np.minimum((u[:, 1] * L).astype(np.int64), L - 1)
    else:
        offset = np.minimum((u[:, 1] * (L - 1)).astype(np.int64), L - 2)
        redrawn = offset + (offset >= clean)

    observed = np.where(selected, redrawn, clean)
    noisy = data.with_noise(observed)
    logger.info(
        f"Injected symmetric noise ({mode.value}, rho={rho}): "
        f"{int(noisy.noise_mask.sum())}/{data.num_examples} labels changed"
    )
    return noisy


def inject_class_conditional(data: LabeledDataset, T: TransitionMatrix, seed: int = 0) -> LabeledDataset:
    """
    Class-conditional noise: a label y is replaced by a draw from row y of T.

    Raises:
        DimensionMismatchError: if T and the dataset disagree on L
    """
    _require_pristine(data)
    if T.num_classes != data.num_classes:
        raise DimensionMismatchError(
            f"transition has L={T.num_classes}, dataset has L={data.num_classes}"
        )
    clean = data.observed_labels
    u = example_uniforms(seed, "inject-class-conditional", data.num_examples)[:, 0]
    cumulative = np.cumsum(T.entries, axis=1)[clean]
    observed = np.minimum((cumulative <= u[:, None]).sum(axis=1), data.num_classes - 1)
    noisy = data.with_noise(observed)
    logger.info(
        f"Injected class-conditional noise: "
        f"{int(noisy.noise_mask.sum())}/{data.num_examples} labels changed"
    )
    return noisy


def empirical_flip_matrix(clean: np.ndarray, observed: np.ndarray, num_classes: int) -> np.ndarray:
    """Row-normalised counts of (clean, observed) label pairs."""
    counts = np.zeros((num_classes, num_classes))
    np.add.at(counts, (np.asarray(clean), np.asarray(observed)), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def estimate_transition_percentile(probs: np.ndarray, percentile: float = 99.9) -> TransitionMatrix:
    """
    Percentile ("anchor point") estimate of the transition matrix.

    For each class j, the example whose predicted probability of j sits at the
    given percentile (nearest rank, ties to the lowest example index) serves as
    the anchor; row j is the model's probability vector there, renormalised.

    Args:
        probs: N×L predicted probabilities of a model trained on noisy labels
        percentile: In (0, 100]; 100 selects the arg-max example per class

    Raises:
        EmptyInputError: if ``probs`` has no rows
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise EmptyInputError("need a non-empty N×L probability matrix")
    if not 0.0 < percentile <= 100.0:
        raise ValidationError(f"percentile must lie in (0, 100], got {percentile}",
                              code="invalid-percentile")
    if np.any(probs < 0.0) or np.max(np.abs(probs.sum(axis=1) - 1.0)) > PROBABILITY_ROW_TOL:
        raise ValidationError("probability rows must be non-negative and sum to 1",
                              code="invalid-distribution")

    n, L = probs.shape
    rank = max(1, math.ceil(percentile / 100.0 * n))
    rows = np.empty((L, L))
    for j in range(L):
        column = probs[:, j]
        threshold = np.sort(column, kind="stable")[rank - 1]
        anchor = int(np.flatnonzero(column == threshold)[0])
        rows[j] = probs[anchor]

    rows /= rows.sum(axis=1, keepdims=True)
    logger.debug(f"Estimated transition matrix from {n} examples at percentile {percentile}")
    return TransitionMatrix(rows)
