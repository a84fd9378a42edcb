"""Test helpers shared across modules."""
import numpy as np

from core.matrices import TransitionMatrix


def random_transition(gen: np.random.Generator, L: int, diagonal: float = 0.6) -> TransitionMatrix:
    """Diagonally dominant row-stochastic matrix (always invertible)."""
    rows = diagonal * np.eye(L) + (1.0 - diagonal) * gen.dirichlet(np.ones(L), size=L)
    rows /= rows.sum(axis=1, keepdims=True)
    return TransitionMatrix(rows)


def central_difference(func, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    grad = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        step = np.zeros_like(x, dtype=np.float64)
        step[idx] = h
        grad[idx] = (func(x + step) - func(x - step)) / (2.0 * h)
    return grad
