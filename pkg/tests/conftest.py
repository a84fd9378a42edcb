"""Shared fixtures."""
import numpy as np
import pytest

from core.dataset import LabeledDataset


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def separable_blobs() -> LabeledDataset:
    """Two well separated classes in 2-D, 100 points each."""
    gen = np.random.default_rng(7)
    features = np.vstack([
        gen.normal([2.0, 2.0], 0.3, size=(100, 2)),
        gen.normal([-2.0, -2.0], 0.3, size=(100, 2)),
    ])
    labels = np.repeat([0, 1], 100)
    return LabeledDataset(features, labels, 2)
