"""
Classifier models: a linear model and a one-hidden-layer rectifier MLP.

Both expose the same small interface used by training and metrics:
``logits``, ``forward_with_cache``/``backward`` for gradients, named
``parameters`` and the subset of them that weight decay applies to.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .rng import generator
from utils.validators import DimensionMismatchError, ValidationError


def _as_matrix(values: Any, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


def _as_vector(values: Any, name: str, length: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape[0] != length:
        raise DimensionMismatchError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def _check_finite(params: Dict[str, np.ndarray]) -> None:
    for name, value in params.items():
        if not np.all(np.isfinite(value)):
            raise ValidationError(f"{name} has non-finite entries", code="non-finite-parameters")


def _check_features(X: np.ndarray, num_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != num_features:
        raise DimensionMismatchError(
            f"expected {num_features} features, got input of shape {X.shape}"
        )
    return X


@dataclass
class LinearModel:
    """
    Linear classifier f(x) = Wx (+ b).

    Attributes:
        weights: L×D matrix W
        bias: Optional length-L vector
    """

    weights: np.ndarray
    bias: Optional[np.ndarray] = None
    decayed: Tuple[str, ...] = field(default=("weights",), init=False, repr=False)

    def __post_init__(self) -> None:
        self.weights = _as_matrix(self.weights, "weights")
        if self.bias is not None:
            self.bias = _as_vector(self.bias, "bias", self.weights.shape[0])
        _check_finite(self.parameters())

    @classmethod
    def zeros(cls, num_classes: int, num_features: int, use_bias: bool = True) -> LinearModel:
        return cls(np.zeros((num_classes, num_features)),
                   np.zeros(num_classes) if use_bias else None)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def num_features(self) -> int:
        return self.weights.shape[1]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {"weights": self.weights}
        if self.bias is not None:
            params["bias"] = self.bias
        return params

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = _check_features(X, self.num_features)
        out = X @ self.weights.T
        if self.bias is not None:
            out = out + self.bias
        return out

    def forward_with_cache(self, X: np.ndarray) -> Tuple[np.ndarray, Any]:
        return self.logits(X), X

    def backward(self, cache: Any, dlogits: np.ndarray) -> Dict[str, np.ndarray]:
        X = cache
        grads = {"weights": dlogits.T @ X}
        if self.bias is not None:
            grads["bias"] = dlogits.sum(axis=0)
        return grads

    def copy(self) -> LinearModel:
        return LinearModel(self.weights.copy(), None if self.bias is None else self.bias.copy())

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return dict(self.parameters())

    def __repr__(self) -> str:
        return f"LinearModel(L={self.num_classes}, D={self.num_features}, bias={self.bias is not None})"


@dataclass
class MlpModel:
    """
    One-hidden-layer rectifier network.

    f(x) = W_out · relu(W_hid x + b_hid) + b_out; the hidden activations are
    the model's pre-logits.
    """

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray
    decayed: Tuple[str, ...] = field(default=("hidden_weights", "output_weights"),
                                     init=False, repr=False)

    def __post_init__(self) -> None:
        self.hidden_weights = _as_matrix(self.hidden_weights, "hidden_weights")
        H = self.hidden_weights.shape[0]
        if H < 1:
            raise ValidationError("MLP needs at least one hidden unit", code="invalid-architecture")
        self.hidden_bias = _as_vector(self.hidden_bias, "hidden_bias", H)
        self.output_weights = _as_matrix(self.output_weights, "output_weights")
        if self.output_weights.shape[1] != H:
            raise DimensionMismatchError(
                f"output_weights must be L×{H}, got {self.output_weights.shape}"
            )
        self.output_bias = _as_vector(self.output_bias, "output_bias", self.output_weights.shape[0])
        _check_finite(self.parameters())

    @classmethod
    def initialize(cls, num_features: int, hidden_units: int, num_classes: int, seed: int) -> MlpModel:
        """Uniform fan-in initialisation U(−1/√fan_in, 1/√fan_in); zero biases."""
        rng = generator(seed, "mlp-init")
        hidden_bound = 1.0 / np.sqrt(num_features)
        output_bound = 1.0 / np.sqrt(hidden_units)
        return cls(
            hidden_weights=rng.uniform(-hidden_bound, hidden_bound, (hidden_units, num_features)),
            hidden_bias=np.zeros(hidden_units),
            output_weights=rng.uniform(-output_bound, output_bound, (num_classes, hidden_units)),
            output_bias=np.zeros(num_classes),
        )

    @property
    def num_classes(self) -> int:
        return self.output_weights.shape[0]

    @property
    def num_features(self) -> int:
        return self.hidden_weights.shape[1]

    @property
    def hidden_units(self) -> int:
        return self.hidden_weights.shape[0]

    def parameters(self) -> Dict[str, np.ndarray]:
        return {
            "hidden_weights": self.hidden_weights,
            "hidden_bias": self.hidden_bias,
            "output_weights": self.output_weights,
            "output_bias": self.output_bias,
        }

    def prelogits(self, X: np.ndarray) -> np.ndarray:
        """Penultimate (hidden) activations."""
        X = _check_features(X, self.num_features)
        return np.maximum(X @ self.hidden_weights.T + self.hidden_bias, 0.0)

    def logits(self, X: np.ndarray) -> np.ndarray:
        return self.prelogits(X) @ self.output_weights.T + self.output_bias

    def forward_with_cache(self, X: np.ndarray) -> Tuple[np.ndarray, Any]:
        X = _check_features(X, self.num_features)
        hidden = np.maximum(X @ self.hidden_weights.T + self.hidden_bias, 0.0)
        return hidden @ self.output_weights.T + self.output_bias, (X, hidden)

    def backward(self, cache: Any, dlogits: np.ndarray) -> Dict[str, np.ndarray]:
        X, hidden = cache
        dhidden = (dlogits @ self.output_weights) * (hidden > 0.0)
        return {
            "hidden_weights": dhidden.T @ X,
            "hidden_bias": dhidden.sum(axis=0),
            "output_weights": dlogits.T @ hidden,
            "output_bias": dlogits.sum(axis=0),
        }

    def copy(self) -> MlpModel:
        return MlpModel(self.hidden_weights.copy(), self.hidden_bias.copy(),
                        self.output_weights.copy(), self.output_bias.copy())

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return dict(self.parameters())

    def __repr__(self) -> str:
        return f"MlpModel(D={self.num_features}, H={self.hidden_units}, L={self.num_classes})"


Model = Union[LinearModel, MlpModel]


def forward(model: Model, x: np.ndarray) -> np.ndarray:
    """Logits for a single D-vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a single D-vector, got shape {x.shape}")
    return model.logits(x)[0]


def model_from_arrays(arrays: Dict[str, np.ndarray]) -> Model:
    """Rebuild a model from its named parameter arrays."""
    if "hidden_weights" in arrays:
        return MlpModel(arrays["hidden_weights"], arrays["hidden_bias"],
                        arrays["output_weights"], arrays["output_bias"])
    return LinearModel(arrays["weights"], arrays.get("bias"))
