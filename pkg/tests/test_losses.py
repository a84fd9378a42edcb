import math

import numpy as np
import pytest

from core.losses import (
    CompiledLoss,
    LossKind,
    LossSpec,
    ce_loss,
    clamp_count,
    forward_loss,
    grad_logits,
    log_softmax,
    loss_curve,
    loss_value,
    omega_regulariser,
    reset_clamp_count,
    smeared_loss,
    smoothed_label,
    softmax,
)
from core.matrices import (
    identity_transition,
    make_backward_matrix,
    make_smoothing_matrix,
    make_standard_matrix,
    make_symmetric_transition,
    transition_from_alpha,
)
from tests.helpers import central_difference, random_transition
from utils.validators import DimensionMismatchError, ValidationError


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5])

    def test_large_logits_do_not_overflow(self):
        np.testing.assert_allclose(softmax([1000.0, 1000.0, 1000.0]), [1 / 3] * 3)

    def test_two_classes(self):
        e = math.e
        np.testing.assert_allclose(softmax([1.0, 0.0]), [e / (1 + e), 1 / (1 + e)])

    def test_log_softmax_matches_log_of_softmax(self, rng):
        f = rng.normal(size=(5, 4))
        np.testing.assert_allclose(log_softmax(f), np.log(softmax(f)), atol=1e-12)


class TestCrossEntropy:
    def test_uniform_two_classes(self):
        assert ce_loss(0, [0.0, 0.0]) == pytest.approx(math.log(2))

    def test_uniform_four_classes(self):
        assert ce_loss(0, [0.0, 0.0, 0.0, 0.0]) == pytest.approx(math.log(4))

    def test_wrong_class(self):
        assert ce_loss(1, [1.0, 0.0]) == pytest.approx(1 + math.log(1 + math.exp(-1)))

    def test_label_out_of_range(self):
        with pytest.raises(ValidationError) as exc:
            ce_loss(2, [0.0, 0.0])
        assert exc.value.code == "index-out-of-range"

    def test_non_finite_logits(self):
        with pytest.raises(ValidationError):
            ce_loss(0, [np.inf, 0.0])


class TestSmoothedLabel:
    def test_ten_classes(self):
        target = smoothed_label(3, 10, 0.1)
        assert target[3] == pytest.approx(0.91)
        np.testing.assert_allclose(np.delete(target, 3), 0.01)

    def test_no_smoothing(self):
        np.testing.assert_allclose(smoothed_label(0, 2, 0.0), [1.0, 0.0])

    def test_full_smoothing(self):
        np.testing.assert_allclose(smoothed_label(0, 4, 1.0), [0.25] * 4)

    def test_matches_smoothing_matrix_row(self):
        np.testing.assert_allclose(smoothed_label(2, 5, 0.3), make_smoothing_matrix(5, 0.3).entries[2])


class TestSmearedLoss:
    def test_identity_is_cross_entropy(self, rng):
        f = rng.normal(size=4)
        assert smeared_loss(make_standard_matrix(4), 2, f) == pytest.approx(ce_loss(2, f))

    def test_smoothing_at_uniform_logits(self):
        assert smeared_loss(make_smoothing_matrix(2, 0.2), 0, [0.0, 0.0]) == pytest.approx(math.log(2))

    def test_backward_can_be_negative(self):
        M = make_backward_matrix(transition_from_alpha(2, 0.2))
        assert smeared_loss(M, 0, [10.0, 0.0]) < 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            smeared_loss(make_standard_matrix(3), 0, [0.0, 0.0])

    def test_backward_is_unbiased_under_noise(self, rng):
        # expected corrected loss over noisy labels equals the clean loss
        for _ in range(500):
            L = int(rng.integers(2, 7))
            T = random_transition(rng, L)
            M = make_backward_matrix(T)
            f = rng.normal(scale=3.0, size=L)
            y = int(rng.integers(L))
            expected = sum(T.entries[y, k] * smeared_loss(M, k, f) for k in range(L))
            assert expected == pytest.approx(ce_loss(y, f), abs=1e-8)


class TestForwardLoss:
    def test_identity_is_cross_entropy(self, rng):
        f = rng.normal(size=3)
        assert forward_loss(identity_transition(3), 1, f) == pytest.approx(ce_loss(1, f))

    def test_saturates_at_minus_log_rho(self):
        T = make_symmetric_transition(2, 0.2)
        assert forward_loss(T, 0, [-50.0, 0.0]) == pytest.approx(-math.log(0.2))

    def test_confident_and_correct(self):
        T = make_symmetric_transition(2, 0.2)
        assert forward_loss(T, 0, [50.0, 0.0]) == pytest.approx(-math.log(0.8))

    def test_clamped_probability_is_counted(self):
        reset_clamp_count()
        value = forward_loss(identity_transition(2), 0, [-800.0, 0.0])
        assert value == pytest.approx(-math.log(1e-300))
        assert clamp_count() == 1
        reset_clamp_count()
        assert clamp_count() == 0

    def test_batch_clamps_counted_once_per_example(self):
        compiled = CompiledLoss(LossSpec.forward(identity_transition(2)), 2)
        logits = np.array([[-800.0, 0.0], [-800.0, 0.0], [3.0, 0.0]])
        reset_clamp_count()
        values, grads = compiled.values_and_gradients(np.array([0, 0, 0]), logits)
        assert clamp_count() == 2
        reset_clamp_count()
        np.testing.assert_allclose(values[:2], -math.log(1e-300))
        np.testing.assert_allclose(grads[0], [0.0, 1.0])

    def test_bayes_consistent_in_binary_case(self):
        T = make_symmetric_transition(2, 0.2)
        clean = np.array([0.7, 0.3])
        noisy = T.entries.T @ clean
        spec = LossSpec.forward(T)
        grid = np.linspace(-10.0, 10.0, 401)
        risks = [
            sum(noisy[k] * loss_value(spec, k, [m, 0.0]) for k in range(2))
            for m in grid
        ]
        best = grid[int(np.argmin(risks))]
        assert abs(best - math.log(0.7 / 0.3)) <= 0.05


class TestLossSpec:
    def test_correction_needs_transition(self):
        with pytest.raises(ValidationError) as exc:
            LossSpec(LossKind.BACKWARD, 0.1)
        assert exc.value.code == "missing-transition"

    def test_labels(self):
        T = transition_from_alpha(3, 0.3)
        assert LossSpec.standard().label == "baseline"
        assert LossSpec.smoothing(0.1).label == "LS(0.1)"
        assert LossSpec.backward(T).label == "BC(0.3)"
        assert LossSpec.forward(T, alpha=0.5).label == "FC(0.5)"

    def test_class_count_mismatch(self):
        spec = LossSpec.forward(make_symmetric_transition(3, 0.1))
        with pytest.raises(DimensionMismatchError):
            CompiledLoss(spec, 4)

    def test_invalid_alpha(self):
        with pytest.raises(ValidationError) as exc:
            LossSpec.smoothing(1.5)
        assert exc.value.code == "invalid-alpha"


class TestGradients:
    def test_standard(self):
        np.testing.assert_allclose(grad_logits(LossSpec.standard(), 0, [0.0, 0.0]), [-0.5, 0.5])

    def test_smoothing(self):
        np.testing.assert_allclose(grad_logits(LossSpec.smoothing(0.2), 0, [0.0, 0.0]), [-0.4, 0.4])

    def _random_spec(self, rng, L):
        kind = int(rng.integers(4))
        if kind == 0:
            return LossSpec.standard()
        if kind == 1:
            return LossSpec.smoothing(float(rng.uniform(0.0, 1.0)))
        T = random_transition(rng, L)
        return LossSpec.backward(T) if kind == 2 else LossSpec.forward(T)

    def test_matches_finite_differences(self, rng):
        for _ in range(1000):
            L = int(rng.integers(2, 6))
            spec = self._random_spec(rng, L)
            f = rng.normal(scale=2.0, size=L)
            y = int(rng.integers(L))
            numeric = central_difference(lambda v: loss_value(spec, y, v), f)
            np.testing.assert_allclose(grad_logits(spec, y, f), numeric, atol=1e-6)

    def test_batch_matches_per_example(self, rng):
        T = random_transition(rng, 4)
        for spec in (LossSpec.smoothing(0.3), LossSpec.backward(T), LossSpec.forward(T)):
            compiled = CompiledLoss(spec, 4)
            logits = rng.normal(size=(16, 4))
            labels = rng.integers(4, size=16)
            values, grads = compiled.values_and_gradients(labels, logits)
            for i in range(16):
                assert values[i] == pytest.approx(loss_value(spec, int(labels[i]), logits[i]))
                np.testing.assert_allclose(grads[i], grad_logits(spec, int(labels[i]), logits[i]), atol=1e-12)

    def test_batch_needs_one_label_per_row(self):
        compiled = CompiledLoss(LossSpec.standard(), 3)
        with pytest.raises(DimensionMismatchError):
            compiled.values(np.array([0, 1]), np.zeros((3, 3)))


class TestOmega:
    def test_single_zero_vector(self):
        assert omega_regulariser([[0.0, 0.0]]) == pytest.approx(2 * math.log(2))

    def test_single_vector(self):
        assert omega_regulariser([[1.0, 0.0]]) == pytest.approx(2 * math.log(1 + math.e) - 1)

    def test_shift_invariance(self, rng):
        F = rng.normal(size=(8, 5))
        shifts = rng.normal(size=(8, 1)) * 10
        assert omega_regulariser(F + shifts) == pytest.approx(omega_regulariser(F))

    def test_empty_batch(self):
        with pytest.raises(ValidationError) as exc:
            omega_regulariser(np.zeros((0, 3)))
        assert exc.value.code == "empty-input"


class TestLossCurve:
    def test_standard_is_decreasing(self):
        curve = loss_curve(LossSpec.standard(), 0, np.linspace(-5, 5, 101))
        values = [v for _, v in curve]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert curve[50][1] == pytest.approx(math.log(2))

    def test_smoothing_has_interior_minimum(self):
        curve = loss_curve(LossSpec.smoothing(0.2), 0)
        margins, values = zip(*curve)
        best = margins[int(np.argmin(values))]
        assert abs(best - math.log(9)) <= 0.05
        assert min(values) > 0.0

    def test_forward_saturates(self):
        curve = loss_curve(LossSpec.forward(make_symmetric_transition(2, 0.2)), 0)
        margin, value = curve[0]
        assert margin == pytest.approx(-10.0)
        assert value == pytest.approx(-math.log(0.2), abs=1e-3)

    def test_default_grid(self):
        assert len(loss_curve(LossSpec.standard(), 1)) == 401
