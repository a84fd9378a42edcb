"""
Teacher/student distillation on noisy labels.

The student never sees the observed labels directly: it is trained only on
the teacher's temperature-softened predictions, optionally with smoothed
targets or forward-corrected predictions on the student side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import LabeledDataset
from .losses import LOG_CLAMP, LossKind, LossSpec, log_softmax, softmax
from .matrices import TransitionMatrix, transition_from_alpha
from .metrics import RunReport, evaluate_run
from .models import Model
from .training import TrainConfig, fit, train
from utils.logger import get_logger
from utils.validators import (
    DimensionMismatchError,
    EmptyInputError,
    ValidationError,
    ensure,
    validate_positive,
)

logger = get_logger(__name__)

DISTILLATION_COLUMNS = ["vanilla", "ls_teacher", "ls_student", "fc_teacher", "fc_student"]


def _check_temperature(temperature: float) -> float:
    ensure(validate_positive(temperature, "temperature"), "invalid-temperature")
    return float(temperature)


def soften(logits: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(logits / temperature) over the last axis."""
    temperature = _check_temperature(temperature)
    return softmax(np.asarray(logits, dtype=np.float64) / temperature)


@dataclass(frozen=True)
class DistillConfig:
    """
    Attributes:
        temperature: Softening applied to both teacher and student logits
        teacher_spec: Loss the teacher is trained with on the noisy labels
        student_spec: standard, smoothing (targets smoothed) or forward
            (student predictions corrected)
    """

    temperature: float = 2.0
    teacher_spec: LossSpec = field(default_factory=LossSpec.standard)
    student_spec: LossSpec = field(default_factory=LossSpec.standard)
    teacher_train: TrainConfig = field(default_factory=TrainConfig)
    student_train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        _check_temperature(self.temperature)
        if self.student_spec.kind == LossKind.BACKWARD:
            raise ValidationError("backward correction is not defined for student targets",
                                  code="invalid-student-spec")


class DistillationObjective:
    """
    Cross-entropy between fixed teacher targets and the softened student.

    loss = −Σ_y t_y · log p^s_y with p^s = softmax(s / T); the gradient with
    respect to the student logits is (p^s − t) / T. Smoothed students use
    t' = (1 − α)·t + α/L; forward-corrected students replace p^s by Tᵀp^s.
    """

    def __init__(self, targets: np.ndarray, temperature: float,
                 student_spec: Optional[LossSpec] = None) -> None:
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim != 2 or targets.shape[0] == 0:
            raise EmptyInputError("distillation needs a non-empty N×L target matrix")
        self.temperature = _check_temperature(temperature)
        self.spec = student_spec or LossSpec.standard()
        self.spec.check_classes(targets.shape[1])
        if self.spec.kind == LossKind.SMOOTHING:
            L = targets.shape[1]
            targets = (1.0 - self.spec.alpha) * targets + self.spec.alpha / L
        elif self.spec.kind == LossKind.BACKWARD:
            raise ValidationError("backward correction is not defined for student targets",
                                  code="invalid-student-spec")
        self.targets = targets

    def __call__(self, indices: np.ndarray, logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        t = self.targets[indices]
        scaled = np.asarray(logits, dtype=np.float64) / self.temperature
        probs = softmax(scaled)

        if self.spec.kind == LossKind.FORWARD:
            T = self.spec.transition.entries
            q = np.maximum(probs @ T, LOG_CLAMP)
            values = -np.sum(t * np.log(q), axis=1)
            grads = probs * (1.0 - (t / q) @ T.T)
        else:
            values = -np.sum(t * log_softmax(scaled), axis=1)
            grads = probs - t
        return values, grads / self.temperature


def _check_architecture(model: Model, data: LabeledDataset, role: str) -> None:
    if model.num_features != data.num_features or model.num_classes != data.num_classes:
        raise DimensionMismatchError(
            f"{role} {model!r} does not match data (D={data.num_features}, L={data.num_classes})",
            code="architecture-mismatch",
        )


def train_teacher(teacher_init: Model, data: LabeledDataset, cfg: DistillConfig) -> Model:
    _check_architecture(teacher_init, data, "teacher")
    teacher, _ = train(teacher_init, data, cfg.teacher_spec, cfg.teacher_train)
    return teacher


def distill_train(
    teacher: Model,
    student_init: Model,
    data: LabeledDataset,
    cfg: DistillConfig,
    test_data: Optional[LabeledDataset] = None,
    seed: int = 0,
) -> Tuple[Model, RunReport]:
    """
    Train a student on the teacher's softened predictions.

    Args:
        teacher: Trained teacher
        student_init: Untrained student of the desired architecture
        data: Training set; only its features reach the student
        test_data: Clean split for the report (defaults to ``data``)

    Returns:
        (student, RunReport evaluated at temperature 1)

    Raises:
        DimensionMismatchError: architecture-mismatch
    """
    _check_architecture(teacher, data, "teacher")
    _check_architecture(student_init, data, "student")

    targets = soften(teacher.logits(data.features), cfg.temperature)
    objective = DistillationObjective(targets, cfg.temperature, cfg.student_spec)
    student, _ = fit(student_init, data.features, objective, cfg.student_train,
                     accuracy_labels=data.observed_labels)
    label = f"student[{cfg.teacher_spec.label}|{cfg.student_spec.label}]"
    report = evaluate_run(student, data, test_data if test_data is not None else data,
                          method=label, alpha=cfg.student_spec.alpha, seed=seed)
    return student, report


def teacher_alpha_sweep(
    alphas: Sequence[float],
    data: LabeledDataset,
    cfg: DistillConfig,
    teacher_init: Model,
    student_init: Model,
    test_data: LabeledDataset,
    seed: int = 0,
) -> List[Tuple[float, float]]:
    """
    Distil at temperature 1 from label-smoothed teachers.

    Returns:
        List of (alpha, student clean-test accuracy), one per alpha
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise EmptyInputError("alpha sweep needs at least one alpha")
    if 0.0 not in alphas:
        raise ValidationError("alpha sweep must include alpha = 0", code="invalid-alpha")

    results = []
    for alpha in alphas:
        sweep_cfg = DistillConfig(
            temperature=1.0,
            teacher_spec=LossSpec.smoothing(alpha),
            student_spec=LossSpec.standard(),
            teacher_train=cfg.teacher_train,
            student_train=cfg.student_train,
        )
        teacher = train_teacher(teacher_init, data, sweep_cfg)
        _, report = distill_train(teacher, student_init, data, sweep_cfg, test_data, seed)
        results.append((alpha, report.test_accuracy))
        logger.info(f"Teacher LS({alpha:g}) -> student test_acc={report.test_accuracy:.4f}")
    return results


def run_distillation_comparison(
    data: LabeledDataset,
    test_data: LabeledDataset,
    teacher_init: Model,
    student_init: Model,
    cfg: DistillConfig,
    alpha: float = 0.1,
    transition: Optional[TransitionMatrix] = None,
    seed: int = 0,
) -> Dict[str, float]:
    """
    Student clean-test accuracy for the five comparison columns: vanilla,
    LS on teacher, LS on student, FC on teacher and FC on student.

    ``transition`` defaults to the symmetric matrix written in ``alpha``.
    """
    T = transition if transition is not None else transition_from_alpha(data.num_classes, alpha)
    variants = {
        "vanilla": (LossSpec.standard(), LossSpec.standard()),
        "ls_teacher": (LossSpec.smoothing(alpha), LossSpec.standard()),
        "ls_student": (LossSpec.standard(), LossSpec.smoothing(alpha)),
        "fc_teacher": (LossSpec.forward(T, alpha), LossSpec.standard()),
        "fc_student": (LossSpec.standard(), LossSpec.forward(T, alpha)),
    }

    teachers: Dict[str, Model] = {}
    results: Dict[str, float] = {}
    for column in DISTILLATION_COLUMNS:
        teacher_spec, student_spec = variants[column]
        variant_cfg = DistillConfig(cfg.temperature, teacher_spec, student_spec,
                                    cfg.teacher_train, cfg.student_train)
        # teachers trained with the same loss are shared between columns
        key = teacher_spec.label
        if key not in teachers:
            teachers[key] = train_teacher(teacher_init, data, variant_cfg)
        _, report = distill_train(teachers[key], student_init, data, variant_cfg, test_data, seed)
        results[column] = report.test_accuracy
    logger.info(f"Distillation comparison (seed={seed}): {results}")
    return results
