"""
Minibatch SGD with Nesterov momentum, decoupled-from-bias weight decay and a
step learning-rate schedule.

``fit`` is the generic loop over any objective callable; ``train`` binds it
to a LossSpec and a labeled dataset.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .dataset import LabeledDataset
from .losses import CompiledLoss, LossSpec
from .models import Model
from .rng import generator
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    DivergenceError,
    EmptyInputError,
    ValidationError,
    ensure,
    validate_positive,
)

logger = get_logger(__name__)

DIVERGENCE_LIMIT = 1e6

# (example indices, logits) -> (per-example losses, d loss / d logits)
Objective = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser settings; defaults are a desk-scale version of the CIFAR schedule."""

    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.1
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 1e-4
    lr_drop_epochs: Tuple[int, ...] = (60, 80)
    lr_drop_factor: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lr_drop_epochs", tuple(int(e) for e in self.lr_drop_epochs))
        ensure(validate_positive(self.epochs, "epochs"), "invalid-config")
        ensure(validate_positive(self.batch_size, "batch_size"), "invalid-config")
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0.0:
            raise ValidationError("learning_rate must be non-negative", code="invalid-config")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError("momentum must lie in [0, 1)", code="invalid-config")
        if self.weight_decay < 0.0:
            raise ValidationError("weight_decay must be non-negative", code="invalid-config")
        ensure(validate_positive(self.lr_drop_factor, "lr_drop_factor"), "invalid-config")

    def learning_rate_at(self, epoch: int) -> float:
        drops = sum(1 for e in self.lr_drop_epochs if epoch >= e)
        return self.learning_rate * self.lr_drop_factor ** drops

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["lr_drop_epochs"] = list(self.lr_drop_epochs)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> TrainConfig:
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: Optional[float] = None


@dataclass
class TrainHistory:
    records: List[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def to_rows(self) -> List[List[Any]]:
        return [[r.epoch, r.train_loss, r.train_accuracy,
                 "" if r.test_accuracy is None else r.test_accuracy] for r in self.records]


class LabelObjective:
    """A compiled loss bound to the labels of a training set."""

    def __init__(self, loss: CompiledLoss, labels: np.ndarray) -> None:
        self.loss = loss
        self.labels = np.asarray(labels, dtype=np.int64)

    def __call__(self, indices: np.ndarray, logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.loss.values_and_gradients(self.labels[indices], logits)


def decay_penalty(model: Model, weight_decay: float) -> float:
    """(weight_decay / 2)·‖decayed parameters‖²; biases are never decayed."""
    if weight_decay == 0.0:
        return 0.0
    params = model.parameters()
    return 0.5 * weight_decay * sum(float(np.sum(params[name] ** 2)) for name in model.decayed)


def full_batch_gradient(model: Model, features: np.ndarray, objective: Objective,
                        weight_decay: float = 0.0) -> Dict[str, np.ndarray]:
    """Gradient of the mean objective plus decay penalty over the whole dataset."""
    indices = np.arange(features.shape[0])
    logits, cache = model.forward_with_cache(features)
    _, dlogits = objective(indices, logits)
    grads = model.backward(cache, dlogits / features.shape[0])
    params = model.parameters()
    for name in model.decayed:
        grads[name] = grads[name] + weight_decay * params[name]
    return grads


def accuracy(model: Model, features: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(model.logits(features), axis=1) == labels))


def fit(
    model: Model,
    features: np.ndarray,
    objective: Objective,
    config: TrainConfig,
    accuracy_labels: Optional[np.ndarray] = None,
    eval_data: Optional[LabeledDataset] = None,
) -> Tuple[Model, TrainHistory]:
    """
    Minibatch SGD on ``mean(objective) + (weight_decay/2)·‖W‖²``.

    The model passed in is left untouched; a trained copy is returned.
    Shuffling uses its own stream, so identical config and seed give
    bitwise-identical parameters.

    Raises:
        DivergenceError: if a minibatch objective is non-finite or above 1e6
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if n == 0:
        raise EmptyInputError("cannot train on an empty dataset")

    model = model.copy()
    params = model.parameters()
    velocity = {name: np.zeros_like(value) for name, value in params.items()}
    decayed = set(model.decayed)
    shuffler = generator(config.seed, "shuffle")
    history = TrainHistory()

    for epoch in range(config.epochs):
        lr = config.learning_rate_at(epoch)
        order = shuffler.permutation(n)
        running = 0.0

        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            logits, cache = model.forward_with_cache(features[batch])
            values, dlogits = objective(batch, logits)
            loss = float(values.mean()) + decay_penalty(model, config.weight_decay)
            if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
                raise DivergenceError(
                    f"objective diverged at epoch {epoch} (loss={loss})", epoch=epoch, loss=loss
                )
            grads = model.backward(cache, dlogits / batch.shape[0])

            for name, value in params.items():
                grad = grads[name]
                if name in decayed and config.weight_decay:
                    grad = grad + config.weight_decay * value
                velocity[name] = config.momentum * velocity[name] + grad
                step = grad + config.momentum * velocity[name] if config.nesterov else velocity[name]
                value -= lr * step

            running += loss * batch.shape[0]

        record = EpochRecord(
            epoch=epoch,
            train_loss=running / n,
            train_accuracy=accuracy(model, features, accuracy_labels) if accuracy_labels is not None else float("nan"),
            test_accuracy=(accuracy(model, eval_data.features, eval_data.true_labels())
                           if eval_data is not None else None),
        )
        history.records.append(record)
        logger.debug(f"epoch {epoch}: loss={record.train_loss:.5f} acc={record.train_accuracy:.4f}")

    return model, history


def train(
    model: Model,
    data: LabeledDataset,
    spec: LossSpec,
    config: TrainConfig,
    eval_data: Optional[LabeledDataset] = None,
) -> Tuple[Model, TrainHistory]:
    """
    Empirical risk minimisation of the smeared / corrected loss on the
    observed labels.

    Returns:
        (trained model copy, per-epoch history)
    """
    if data.num_examples == 0:
        raise EmptyInputError("cannot train on an empty dataset")
    if model.num_features != data.num_features or model.num_classes != data.num_classes:
        raise DimensionMismatchError(
            f"{model!r} does not match data (D={data.num_features}, L={data.num_classes})"
        )
    objective = LabelObjective(CompiledLoss(spec, data.num_classes), data.observed_labels)
    trained, history = fit(model, data.features, objective, config,
                           accuracy_labels=data.observed_labels, eval_data=eval_data)
    final = history.final
    logger.info(
        f"Trained {trained!r} with {spec.label}: loss={final.train_loss:.4f} "
        f"train_acc={final.train_accuracy:.4f}"
    )
    return trained, history
