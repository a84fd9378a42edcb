"""
Experiment configuration: a JSON document parsed into a dataclass tree.

Every field has a default, so ``ExperimentConfig.from_dict({})`` is the
documented desk-scale benchmark (5-class 20-dimensional blobs, 20%
resample-any noise, five seeds).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .dataset import LabeledDataset
from .losses import LossKind
from .models import LinearModel, MlpModel, Model
from .noise import InjectionMode
from .synthlab import BlobSpec, figure5_blob_spec, make_blobs, simplex_blob_spec
from .training import TrainConfig
from utils.validators import ConfigError, ValidationError

DATASET_SOURCES = ("simplex-blobs", "blobs", "figure5", "csv")
NOISE_KINDS = ("none", "symmetric", "class-conditional")
TRANSITION_SOURCES = ("smoothing", "noise", "estimated", "file")
MODEL_TYPES = ("linear", "mlp")


def _pick(cls: type, data: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} block must be a JSON object")
    unknown = set(data) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return dict(data)


def _one_of(value: str, allowed: Tuple[str, ...], name: str) -> None:
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {allowed}, got {value!r}")


@dataclass
class DatasetConfig:
    """Where training and test data come from."""

    source: str = "simplex-blobs"
    num_classes: int = 5
    dim: int = 20
    radius: float = 3.0
    variance: float = 1.0
    centers: Optional[List[List[float]]] = None
    train_per_class: int = 30
    test_per_class: int = 500
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    # headerless csv files only; a header row names its own clean column
    has_clean_column: Optional[bool] = None

    def __post_init__(self) -> None:
        _one_of(self.source, DATASET_SOURCES, "dataset.source")
        if self.source == "blobs" and not self.centers:
            raise ConfigError("dataset.centers is required for source 'blobs'")
        if self.source == "csv" and not (self.train_path and self.test_path):
            raise ConfigError("dataset.train_path and dataset.test_path are required for source 'csv'")

    def blob_spec(self, seed: int, samples_per_class: int) -> BlobSpec:
        if self.source == "simplex-blobs":
            return simplex_blob_spec(self.num_classes, self.dim, self.radius, self.variance,
                                     samples_per_class, seed)
        if self.source == "figure5":
            return figure5_blob_spec(samples_per_class, seed)
        return BlobSpec(self.centers, self.variance, samples_per_class, seed)

    def generate(self, seed: int) -> Tuple[LabeledDataset, LabeledDataset]:
        """(train, test) drawn from independent streams of one seed."""
        if self.source == "csv":
            raise ConfigError("csv datasets are loaded from disk, not generated")
        train = make_blobs(self.blob_spec(seed, self.train_per_class), stream="blobs-train")
        test = make_blobs(self.blob_spec(seed, self.test_per_class), stream="blobs-test")
        return train, test


@dataclass
class NoiseConfig:
    """Noise injected into the training split only."""

    kind: str = "symmetric"
    mode: str = InjectionMode.RESAMPLE_ANY.value
    rho: float = 0.2
    transition_file: Optional[str] = None

    def __post_init__(self) -> None:
        _one_of(self.kind, NOISE_KINDS, "noise.kind")
        _one_of(self.mode, tuple(m.value for m in InjectionMode), "noise.mode")
        if self.kind == "class-conditional" and not self.transition_file:
            raise ConfigError("noise.transition_file is required for class-conditional noise")


@dataclass
class MethodConfig:
    """
    One entry of the method grid.

    ``transition`` says where backward/forward correction gets T from:
    ``smoothing`` (symmetric T written in alpha), ``noise`` (the injected
    T), ``estimated`` (percentile estimate) or ``file``.
    """

    kind: str = LossKind.STANDARD.value
    alpha: float = 0.0
    transition: str = "smoothing"

    def __post_init__(self) -> None:
        _one_of(self.kind, tuple(k.value for k in LossKind), "method.kind")
        _one_of(self.transition, TRANSITION_SOURCES, "method.transition")
        if not isinstance(self.alpha, (int, float)) or not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"method.alpha must lie in [0, 1], got {self.alpha!r}")

    @property
    def needs_transition(self) -> bool:
        return self.kind in (LossKind.BACKWARD.value, LossKind.FORWARD.value)

    @property
    def label(self) -> str:
        if self.kind == LossKind.STANDARD.value:
            return "baseline"
        short = {"smoothing": "LS", "backward": "BC", "forward": "FC"}[self.kind]
        suffix = "" if not self.needs_transition or self.transition == "smoothing" else f"/{self.transition}"
        return f"{short}({self.alpha:g}){suffix}"


@dataclass
class ModelConfig:
    type: str = "linear"
    hidden_units: int = 32
    use_bias: bool = True

    def __post_init__(self) -> None:
        _one_of(self.type, MODEL_TYPES, "model.type")
        if self.type == "mlp" and self.hidden_units < 1:
            raise ConfigError("model.hidden_units must be at least 1")

    def build(self, num_features: int, num_classes: int, seed: int) -> Model:
        if self.type == "linear":
            return LinearModel.zeros(num_classes, num_features, self.use_bias)
        return MlpModel.initialize(num_features, self.hidden_units, num_classes, seed)


@dataclass
class DistillBlock:
    """Settings for the ``distill`` verb."""

    temperature: float = 2.0
    alpha: float = 0.1
    sweep_alphas: List[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5])
    student_train: Optional[Dict[str, Any]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.temperature, (int, float)) or self.temperature <= 0:
            raise ConfigError(f"distill.temperature must be positive, got {self.temperature!r}")
        if not self.sweep_alphas or 0.0 not in [float(a) for a in self.sweep_alphas]:
            raise ConfigError("distill.sweep_alphas must be nonempty and include 0")


BENCHMARK_METHODS = (
    MethodConfig("standard"),
    MethodConfig("smoothing", 0.1),
    MethodConfig("smoothing", 0.3),
    MethodConfig("backward", 0.7),
    MethodConfig("forward", 0.1),
    MethodConfig("forward", 0.3),
)

MLP_DENOISING_ALPHAS = (0.0, 0.1, 0.2)


@dataclass
class ExperimentConfig:
    """Root of the experiment document."""

    name: str = "blob-benchmark"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    methods: List[MethodConfig] = field(default_factory=lambda: list(BENCHMARK_METHODS))
    model: ModelConfig = field(default_factory=ModelConfig)
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: Optional[str] = None
    ece_bins: int = 100
    percentile: float = 99.9
    distill: Optional[DistillBlock] = field(default_factory=DistillBlock)

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in self.seeds):
            raise ConfigError(f"seeds must be non-negative integers, got {self.seeds}")
        if self.ece_bins < 1:
            raise ConfigError("ece_bins must be at least 1")
        if not 0.0 < self.percentile <= 100.0:
            raise ConfigError("percentile must lie in (0, 100]")
        if any(m.transition == "file" and m.needs_transition for m in self.methods) \
                and not self.noise.transition_file:
            raise ConfigError("a method reads its transition from file but noise.transition_file is unset")

    def student_train(self) -> TrainConfig:
        if self.distill is None or self.distill.student_train is None:
            return self.train
        return TrainConfig.from_dict({**self.train.to_dict(), **self.distill.student_train})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> ExperimentConfig:
        """
        Parse an experiment document.

        Raises:
            ConfigError: for unknown fields, wrong types or invalid values
        """
        data = _pick(cls, data)
        try:
            if "dataset" in data:
                data["dataset"] = DatasetConfig(**_pick(DatasetConfig, data["dataset"]))
            if "noise" in data:
                data["noise"] = NoiseConfig(**_pick(NoiseConfig, data["noise"]))
            if "methods" in data:
                if not isinstance(data["methods"], list):
                    raise ConfigError("methods must be a list")
                data["methods"] = [MethodConfig(**_pick(MethodConfig, m)) for m in data["methods"]]
            if "model" in data:
                data["model"] = ModelConfig(**_pick(ModelConfig, data["model"]))
            if "train" in data:
                data["train"] = TrainConfig(**_pick(TrainConfig, data["train"]))
            if data.get("distill") is not None:
                data["distill"] = DistillBlock(**_pick(DistillBlock, data["distill"]))
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError, ValidationError) as e:
            raise ConfigError(f"invalid experiment config: {e}")

    @classmethod
    def mlp_denoising(cls) -> ExperimentConfig:
        """
        The benchmark blobs and noise with a small MLP and an LS sweep.

        More training points, few hidden units and real weight decay keep
        memorising the noisy labels costly, so the clean/noisy accuracy
        breakdown moves with α instead of sitting at full memorisation.
        """
        return cls.from_dict({
            "name": "mlp-denoising",
            "dataset": {"train_per_class": 100},
            "methods": [{"kind": "standard"}]
                       + [{"kind": "smoothing", "alpha": a} for a in MLP_DENOISING_ALPHAS[1:]],
            "model": {"type": "mlp", "hidden_units": 16},
            "train": {"weight_decay": 1e-3},
        })

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["train"] = self.train.to_dict()
        return data

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None,
                       transition_file: Optional[str] = None) -> ExperimentConfig:
        """Copy with command-line overrides applied."""
        data = self.to_dict()
        if seed is not None:
            data["seeds"] = [seed]
        if output_dir is not None:
            data["output_dir"] = output_dir
        if transition_file is not None:
            data["noise"]["transition_file"] = transition_file
        return ExperimentConfig.from_dict(data)
