"""
Synthetic Gaussian-blob datasets and the separator-offset experiment.

The two-class problem has a positive class 0 centred at +(1,1) and a
negative class 1 at −(1,1), isotropic variance 0.01. Asymmetric noise flips
5% of the negatives to positive, which drags a logistic-regression
separator toward the negatives; smoothing or ℓ₂ shrinkage pulls it back.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .dataset import LabeledDataset
from .losses import LossSpec
from .matrices import TransitionMatrix
from .models import LinearModel
from .noise import inject_class_conditional
from .rng import generator
from .training import TrainConfig, train
from utils.logger import get_logger
from utils.validators import (
    DegenerateGeometryError,
    DimensionMismatchError,
    EmptyInputError,
    ValidationError,
    ensure,
    validate_positive,
)

logger = get_logger(__name__)

GEOMETRY_TOL = 1e-12
FIGURE5_DIRECTION = np.array([1.0, 1.0]) / np.sqrt(2.0)
FIGURE5_TRANSITION = TransitionMatrix([[1.0, 0.0], [0.05, 0.95]])
FIGURE5_TRANSITION_LABEL = "T=[[1,0],[0.05,0.95]];class0=+(1,1);class1=-(1,1)"


@dataclass(frozen=True, eq=False)
class BlobSpec:
    """
    Isotropic Gaussian class-conditionals.

    Attributes:
        centers: One D-vector per class
        variance: σ² shared by every class; 0 puts every point on its centre
        samples_per_class: Points drawn per centre
        seed: Generator seed
    """

    centers: np.ndarray
    variance: float
    samples_per_class: int
    seed: int = 0

    def __post_init__(self) -> None:
        centers = np.array(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 2:
            raise DimensionMismatchError("need at least two D-dimensional centers")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if not np.isfinite(self.variance) or self.variance < 0.0:
            raise ValidationError(f"variance must be non-negative, got {self.variance}")
        ensure(validate_positive(self.samples_per_class, "samples_per_class"), "invalid-input")

    @property
    def num_classes(self) -> int:
        return self.centers.shape[0]


def make_blobs(spec: BlobSpec, stream: str = "blobs") -> LabeledDataset:
    """
    Draw ``samples_per_class`` points around every centre, class by class.

    ``stream`` separates independent draws (train vs test) from one spec.
    """
    rng = generator(spec.seed, stream)
    n = int(spec.samples_per_class)
    scale = np.sqrt(spec.variance)
    features = np.vstack([
        center + scale * rng.standard_normal((n, spec.centers.shape[1]))
        for center in spec.centers
    ])
    labels = np.repeat(np.arange(spec.num_classes), n)
    data = LabeledDataset(features, labels, spec.num_classes)
    logger.debug(f"Generated {data!r} from stream '{stream}'")
    return data


def simplex_blob_spec(num_classes: int, dim: int, radius: float, variance: float,
                      samples_per_class: int, seed: int = 0) -> BlobSpec:
    """Equal-norm, mutually orthogonal centres radius·e_k."""
    if dim < num_classes:
        raise DimensionMismatchError(f"need dim >= num_classes for orthogonal centres, got {dim}")
    centers = radius * np.eye(num_classes, dim)
    return BlobSpec(centers, variance, samples_per_class, seed)


def make_simplex_blobs(num_classes: int, dim: int, radius: float, variance: float,
                       samples_per_class: int, seed: int = 0,
                       stream: str = "blobs") -> LabeledDataset:
    return make_blobs(simplex_blob_spec(num_classes, dim, radius, variance,
                                        samples_per_class, seed), stream)


def figure5_blob_spec(samples_per_class: int = 500, seed: int = 0) -> BlobSpec:
    return BlobSpec([[1.0, 1.0], [-1.0, -1.0]], 0.01, samples_per_class, seed)


# ========== Separator geometry ==========

def separator_offset(model: LinearModel, direction: np.ndarray = FIGURE5_DIRECTION) -> float:
    """
    Signed position of the two-class decision boundary along ``direction``.

    The boundary {x : (w₀ − w₁)·x + (b₀ − b₁) = 0} meets the line t·d̂ at
    t = −(b₀ − b₁) / ((w₀ − w₁)·d̂).

    Raises:
        DegenerateGeometryError: degenerate-model if w₀ = w₁ or the boundary
            is parallel to the direction
    """
    if model.num_classes != 2:
        raise DimensionMismatchError(f"separator offset needs 2 classes, got {model.num_classes}")
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != (model.num_features,):
        raise DimensionMismatchError(f"direction must have {model.num_features} entries")
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ValidationError("direction must be nonzero", code="invalid-direction")

    normal = model.weights[0] - model.weights[1]
    along = float(normal @ direction) / norm
    if np.linalg.norm(normal) < GEOMETRY_TOL or abs(along) < GEOMETRY_TOL:
        raise DegenerateGeometryError("model has no separator along the direction",
                                      code="degenerate-model")
    shift = 0.0 if model.bias is None else float(model.bias[0] - model.bias[1])
    return -shift / along


@dataclass(frozen=True)
class SeparatorRecord:
    setting: str
    value: float
    seed: int
    offset: float


def figure5_experiment(
    alphas: Sequence[float],
    l2_coeffs: Sequence[float],
    seeds: Union[int, Iterable[int]] = 0,
    samples_per_class: int = 500,
    train_config: Optional[TrainConfig] = None,
) -> List[SeparatorRecord]:
    """
    Separator offsets on the asymmetric-noise blob problem.

    Per seed: one ``clean`` run (standard loss, clean labels), one
    ``smoothing`` run per alpha (no weight decay) and one ``l2`` run per
    coefficient (standard loss), all logistic regression with a bias.
    """
    if not alphas or not l2_coeffs:
        raise EmptyInputError("alphas and l2_coeffs must be nonempty")
    seeds = [seeds] if isinstance(seeds, (int, np.integer)) else list(seeds)
    base = train_config or TrainConfig(weight_decay=0.0)
    records: List[SeparatorRecord] = []

    for seed in seeds:
        clean = make_blobs(figure5_blob_spec(samples_per_class, seed))
        noisy = inject_class_conditional(clean, FIGURE5_TRANSITION, seed)
        init = LinearModel.zeros(2, 2, use_bias=True)

        def offset_for(data: LabeledDataset, spec: LossSpec, weight_decay: float) -> float:
            cfg = TrainConfig.from_dict({**base.to_dict(), "weight_decay": weight_decay, "seed": seed})
            model, _ = train(init, data, spec, cfg)
            return separator_offset(model)

        records.append(SeparatorRecord("clean", 0.0, seed,
                                       offset_for(clean, LossSpec.standard(), 0.0)))
        for alpha in alphas:
            records.append(SeparatorRecord("smoothing", float(alpha), seed,
                                           offset_for(noisy, LossSpec.smoothing(alpha), 0.0)))
        for coeff in l2_coeffs:
            records.append(SeparatorRecord("l2", float(coeff), seed,
                                           offset_for(noisy, LossSpec.standard(), float(coeff))))
        logger.info(f"Separator offsets for seed {seed} done")
    return records


def summarise_offsets(records: Sequence[SeparatorRecord]) -> List[Tuple[str, float, float, float]]:
    """(setting, alpha_or_l2, offset_mean, offset_std) per setting, population std."""
    groups: Dict[Tuple[str, float], List[float]] = {}
    for record in records:
        groups.setdefault((record.setting, record.value), []).append(record.offset)
    return [
        (setting, value, float(np.mean(offsets)), float(np.std(offsets)))
        for (setting, value), offsets in groups.items()
    ]
