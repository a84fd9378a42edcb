"""
Labeled dataset model: features, observed labels and, after noise
injection, the clean labels and the noise mask.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from utils.validators import (
    DimensionMismatchError,
    MissingLabelsError,
    ValidationError,
    ensure,
    validate_labels,
    validate_same_length,
)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Dense feature matrix with observed (possibly noisy) labels.

    Attributes:
        features: N×D real matrix
        observed_labels: N class indices used for training
        num_classes: L
        clean_labels: N class indices before noise injection, if known
        noise_mask: N booleans, True where the observed label was changed
    """

    features: np.ndarray
    observed_labels: np.ndarray
    num_classes: int
    clean_labels: Optional[np.ndarray] = None
    noise_mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DimensionMismatchError(f"features must be N×D, got shape {features.shape}")
        observed = np.array(self.observed_labels, dtype=np.int64)
        object.__setattr__(self, "features", _readonly(features))
        object.__setattr__(self, "observed_labels", _readonly(observed))
        object.__setattr__(self, "num_classes", int(self.num_classes))

        if self.num_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.num_classes}", code="invalid-L")
        ensure(validate_same_length([features, observed], ["features", "observed_labels"]),
               "dimension-mismatch", DimensionMismatchError)
        ensure(validate_labels(observed, self.num_classes, "observed_labels"), "invalid-labels")

        if self.clean_labels is not None:
            clean = np.array(self.clean_labels, dtype=np.int64)
            ensure(validate_same_length([observed, clean], ["observed_labels", "clean_labels"]),
                   "dimension-mismatch", DimensionMismatchError)
            ensure(validate_labels(clean, self.num_classes, "clean_labels"), "invalid-labels")
            object.__setattr__(self, "clean_labels", _readonly(clean))

        if self.noise_mask is not None:
            mask = np.array(self.noise_mask, dtype=bool)
            ensure(validate_same_length([observed, mask], ["observed_labels", "noise_mask"]),
                   "dimension-mismatch", DimensionMismatchError)
            if self.clean_labels is not None and not np.array_equal(mask, observed != self.clean_labels):
                raise ValidationError("noise_mask must flag exactly the changed labels",
                                      code="invalid-labels")
            object.__setattr__(self, "noise_mask", _readonly(mask))

    # ========== Shape ==========

    @property
    def num_examples(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def has_clean_labels(self) -> bool:
        return self.clean_labels is not None

    @property
    def is_noisy(self) -> bool:
        return self.noise_mask is not None

    # ========== Views ==========

    def require_clean(self) -> np.ndarray:
        if self.clean_labels is None or self.noise_mask is None:
            raise MissingLabelsError("dataset has no clean labels / noise mask",
                                     code="missing-clean-labels")
        return self.clean_labels

    def true_labels(self) -> np.ndarray:
        """Clean labels when known, otherwise the observed ones."""
        return self.clean_labels if self.clean_labels is not None else self.observed_labels

    def subset(self, indices: np.ndarray) -> LabeledDataset:
        indices = np.asarray(indices)
        return LabeledDataset(
            features=self.features[indices],
            observed_labels=self.observed_labels[indices],
            num_classes=self.num_classes,
            clean_labels=None if self.clean_labels is None else self.clean_labels[indices],
            noise_mask=None if self.noise_mask is None else self.noise_mask[indices],
        )

    def with_noise(self, observed_labels: np.ndarray) -> LabeledDataset:
        """Copy whose current labels become the clean ones and ``observed_labels`` the noisy ones."""
        clean = self.observed_labels
        observed = np.asarray(observed_labels, dtype=np.int64)
        return LabeledDataset(
            features=self.features,
            observed_labels=observed,
            num_classes=self.num_classes,
            clean_labels=clean,
            noise_mask=observed != clean,
        )

    def centered(self) -> LabeledDataset:
        """Copy with column-centred features."""
        return LabeledDataset(
            features=self.features - self.features.mean(axis=0, keepdims=True),
            observed_labels=self.observed_labels,
            num_classes=self.num_classes,
            clean_labels=self.clean_labels,
            noise_mask=self.noise_mask,
        )

    def summary(self) -> Dict[str, Any]:
        noisy = int(self.noise_mask.sum()) if self.noise_mask is not None else 0
        return {
            "examples": self.num_examples,
            "features": self.num_features,
            "classes": self.num_classes,
            "noisy": noisy,
        }

    def __repr__(self) -> str:
        s = self.summary()
        return f"LabeledDataset(N={s['examples']}, D={s['features']}, L={s['classes']}, noisy={s['noisy']})"
