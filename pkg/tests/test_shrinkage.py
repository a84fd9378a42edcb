import numpy as np
import pytest

from core.models import LinearModel
from core.shrinkage import closed_form_smoothed_least_squares, omega_gradient_at, omega_value
from tests.helpers import central_difference
from utils.validators import SingularMatrixError


def one_hot(labels, num_classes):
    return np.eye(num_classes)[labels]


class TestSmoothedLeastSquares:
    def test_no_smoothing_is_ordinary_least_squares(self, rng):
        X = rng.normal(size=(40, 4))
        Y = one_hot(rng.integers(3, size=40), 3)
        expected, *_ = np.linalg.lstsq(X, Y, rcond=None)
        np.testing.assert_allclose(closed_form_smoothed_least_squares(X, Y, 0.0), expected.T, atol=1e-10)

    def test_matches_least_squares_on_smoothed_targets(self, rng):
        X = rng.normal(size=(50, 3))
        Y = one_hot(rng.integers(2, size=50), 2)
        for alpha in (0.1, 0.5, 0.9):
            smoothed = (1 - alpha) * Y + alpha / 2
            expected, *_ = np.linalg.lstsq(X, smoothed, rcond=None)
            np.testing.assert_allclose(
                closed_form_smoothed_least_squares(X, Y, alpha), expected.T, atol=1e-8
            )

    def test_centred_design_is_pure_shrinkage(self, rng):
        X = rng.normal(size=(60, 3))
        X -= X.mean(axis=0)
        Y = one_hot(rng.integers(4, size=60), 4)
        ordinary = closed_form_smoothed_least_squares(X, Y, 0.0)
        np.testing.assert_allclose(closed_form_smoothed_least_squares(X, Y, 0.3), 0.7 * ordinary, atol=1e-10)
        np.testing.assert_allclose(closed_form_smoothed_least_squares(X, Y, 1.0), 0.0, atol=1e-10)

    def test_singular_design(self):
        X = np.ones((10, 2))
        with pytest.raises(SingularMatrixError) as exc:
            closed_form_smoothed_least_squares(X, one_hot(np.zeros(10, dtype=int), 2), 0.1)
        assert exc.value.code == "singular-design"


class TestOmegaGradient:
    def test_zero_model_is_stationary(self, rng):
        model = LinearModel.zeros(4, 3, use_bias=False)
        for _ in range(20):
            features = rng.normal(scale=rng.uniform(0.1, 10.0), size=(int(rng.integers(1, 50)), 3))
            assert np.abs(omega_gradient_at(model, features)).max() <= 1e-10

    def test_zero_model_is_the_minimiser(self, rng):
        features = rng.normal(size=(30, 3))
        best = omega_value(LinearModel.zeros(4, 3, use_bias=False), features)
        assert best == pytest.approx(4 * np.log(4))
        for _ in range(100):
            perturbed = LinearModel(rng.normal(scale=0.5, size=(4, 3)), None)
            assert omega_value(perturbed, features) >= best - 1e-12

    def test_zero_feature_gives_zero_gradient(self, rng):
        model = LinearModel(rng.normal(size=(3, 2)), None)
        np.testing.assert_allclose(omega_gradient_at(model, np.zeros((1, 2))), 0.0)

    def test_matches_finite_differences(self, rng):
        features = rng.normal(size=(12, 3))
        weights = rng.normal(size=(4, 3))
        numeric = central_difference(lambda w: omega_value(LinearModel(w, None), features), weights)
        analytic = omega_gradient_at(LinearModel(weights, None), features)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)
