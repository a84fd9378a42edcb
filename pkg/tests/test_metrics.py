import numpy as np
import pytest

from core.dataset import LabeledDataset
from core.losses import LossSpec
from core.metrics import (
    REPORT_FIELDS,
    RunReport,
    breakdown_accuracy,
    breakdown_from_predictions,
    ece,
    evaluate_run,
    gap_samples_by_split,
    gap_shift,
    logit_gap_samples,
    noisy_centroid_distance,
    prelogit_projection,
    project_prelogits,
)
from core.models import LinearModel, MlpModel
from core.training import TrainConfig, train
from utils.validators import (
    DegenerateGeometryError,
    EmptyInputError,
    MissingLabelsError,
    ValidationError,
)


def brute_force_ece(probs, labels, bins):
    total = 0.0
    confidence = probs.max(axis=1)
    correct = probs.argmax(axis=1) == labels
    for i in range(1, bins + 1):
        lo, hi = (i - 1) / bins, i / bins
        members = [n for n in range(len(labels)) if lo < confidence[n] <= hi]
        if members:
            acc = np.mean([correct[n] for n in members])
            conf = np.mean([confidence[n] for n in members])
            total += len(members) / len(labels) * abs(acc - conf)
    return total


@pytest.fixture
def noisy_train() -> LabeledDataset:
    clean = LabeledDataset(np.zeros((6, 2)), [0, 1, 2, 0, 1, 2], 3)
    return clean.with_noise([0, 1, 2, 1, 2, 0])


class TestRunReport:
    def test_rejects_accuracy_outside_unit_interval(self):
        with pytest.raises(ValidationError):
            RunReport(test_accuracy=1.5)

    def test_diverged(self):
        report = RunReport.diverged("LS(0.1)", 0.1, 3)
        assert not report.ok
        assert report.to_dict()["status"] == "diverged"
        assert report.test_accuracy is None

    def test_row_follows_field_order(self):
        report = RunReport(method="baseline", seed=1, test_accuracy=0.5, ece=0.1)
        assert len(report.to_row()) == len(REPORT_FIELDS)
        assert report.to_row()[:4] == ["baseline", None, 1, "ok"]


class TestBreakdown:
    def test_predicting_clean_labels(self, noisy_train):
        result = breakdown_from_predictions(noisy_train.clean_labels, noisy_train)
        assert result == {
            "train_accuracy_full_true": 1.0,
            "train_accuracy_clean_true": 1.0,
            "train_accuracy_noisy_true": 1.0,
            "train_accuracy_noisy_observed": 0.0,
        }

    def test_predicting_observed_labels(self, noisy_train):
        result = breakdown_from_predictions(noisy_train.observed_labels, noisy_train)
        assert result["train_accuracy_noisy_true"] == 0.0
        assert result["train_accuracy_noisy_observed"] == 1.0
        assert result["train_accuracy_clean_true"] == 1.0

    def test_full_accuracy_is_weighted_mix(self, rng, noisy_train):
        predictions = rng.integers(3, size=6)
        result = breakdown_from_predictions(predictions, noisy_train)
        noisy_share = noisy_train.noise_mask.mean()
        mixed = ((1 - noisy_share) * result["train_accuracy_clean_true"]
                 + noisy_share * result["train_accuracy_noisy_true"])
        assert result["train_accuracy_full_true"] == pytest.approx(mixed)

    def test_empty_noisy_part(self):
        data = LabeledDataset(np.zeros((3, 1)), [0, 1, 0], 2).with_noise([0, 1, 0])
        result = breakdown_from_predictions(np.array([0, 1, 1]), data)
        assert result["train_accuracy_noisy_true"] is None
        assert result["train_accuracy_full_true"] == pytest.approx(2 / 3)

    def test_requires_clean_labels(self):
        data = LabeledDataset(np.zeros((2, 1)), [0, 1], 2)
        with pytest.raises(MissingLabelsError):
            breakdown_accuracy(LinearModel.zeros(2, 1), data)


class TestEce:
    def test_confident_and_correct(self):
        assert ece(np.eye(3), np.arange(3)) == 0.0

    def test_two_examples_in_one_bin(self):
        probs = np.array([[0.8, 0.2], [0.8, 0.2]])
        assert ece(probs, np.array([0, 1]), bins=10) == pytest.approx(0.3)

    def test_matches_brute_force_binning(self, rng):
        probs = rng.dirichlet(np.ones(4) * 0.5, size=200)
        labels = rng.integers(4, size=200)
        assert ece(probs, labels, 100) == pytest.approx(brute_force_ece(probs, labels, 100), abs=1e-12)

    def test_invariant_to_order_and_duplication(self, rng):
        probs = rng.dirichlet(np.ones(3), size=50)
        labels = rng.integers(3, size=50)
        base = ece(probs, labels, 15)
        order = rng.permutation(50)
        assert ece(probs[order], labels[order], 15) == pytest.approx(base, abs=1e-12)
        assert ece(np.vstack([probs, probs]), np.concatenate([labels, labels]), 15) == pytest.approx(base, abs=1e-12)

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            ece(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_invalid_bins(self):
        with pytest.raises(ValidationError) as exc:
            ece(np.eye(2), np.arange(2), bins=0)
        assert exc.value.code == "invalid-bins"


class TestGaps:
    def test_uniform_predictor(self, noisy_train):
        gaps = logit_gap_samples(LinearModel.zeros(3, 2), noisy_train, "observed")
        np.testing.assert_allclose(gaps, 0.0)

    def test_one_hot_predictor(self):
        data = LabeledDataset(np.eye(3), [0, 1, 2], 3)
        model = LinearModel(100.0 * np.eye(3))
        np.testing.assert_allclose(logit_gap_samples(model, data, "max"), 1 - 1 / 3, atol=1e-12)

    def test_logit_gaps(self):
        data = LabeledDataset(np.array([[1.0, 0.0]]), [0], 2)
        model = LinearModel(np.array([[3.0, 0.0], [1.0, 0.0]]))
        np.testing.assert_allclose(logit_gap_samples(model, data, "observed", use_logits=True), [1.0])

    def test_clean_source_needs_clean_labels(self):
        data = LabeledDataset(np.zeros((2, 1)), [0, 1], 2)
        with pytest.raises(MissingLabelsError):
            logit_gap_samples(LinearModel.zeros(2, 1), data, "clean")

    def test_unknown_source(self, noisy_train):
        with pytest.raises(ValidationError):
            logit_gap_samples(LinearModel.zeros(3, 2), noisy_train, "both")

    def test_split_keys(self, noisy_train):
        samples = gap_samples_by_split(LinearModel.zeros(3, 2), noisy_train)
        assert set(samples) == {"clean_observed", "noisy_observed", "clean_clean", "noisy_clean"}
        assert samples["noisy_observed"].shape == (3,)

    def test_shift_detects_smaller_sample(self, rng):
        reference = rng.normal(size=400)
        shift = gap_shift(reference - 1.0, reference)
        assert shift.mean_difference == pytest.approx(-1.0)
        assert shift.smaller_pvalue < 1e-6
        assert shift.larger_pvalue > 0.5

    def test_shift_needs_samples(self):
        with pytest.raises(EmptyInputError):
            gap_shift([], [1.0])


class TestProjection:
    @pytest.fixture
    def mlp(self, rng) -> MlpModel:
        return MlpModel(rng.normal(size=(5, 2)), np.zeros(5), rng.normal(size=(4, 5)), np.zeros(4))

    def test_templates_map_to_distinct_points(self, mlp):
        points = project_prelogits(mlp, mlp.output_weights[[0, 1, 2]], (0, 1, 2))
        assert not np.allclose(points[0], points[1])
        assert not np.allclose(points[0], points[2])

    def test_orthogonal_offset_projects_to_origin(self, mlp):
        w = mlp.output_weights
        center = w[:3].mean(axis=0)
        plane = np.vstack([w[1] - w[0], w[2] - w[0]])
        _, _, vt = np.linalg.svd(plane)
        normal = vt[-1]
        np.testing.assert_allclose(project_prelogits(mlp, center + 3.0 * normal, (0, 1, 2)), [[0.0, 0.0]], atol=1e-10)

    def test_coordinates_preserve_distances_in_plane(self, mlp):
        w = mlp.output_weights
        points = project_prelogits(mlp, w[:3], (0, 1, 2))
        assert np.linalg.norm(points[1] - points[0]) == pytest.approx(np.linalg.norm(w[1] - w[0]))

    def test_degenerate_templates(self):
        model = MlpModel(np.eye(3), np.zeros(3), np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]]), np.zeros(3))
        with pytest.raises(DegenerateGeometryError) as exc:
            project_prelogits(model, np.zeros(3), (0, 1, 2))
        assert exc.value.code == "degenerate-basis"

    def test_needs_mlp(self):
        with pytest.raises(ValidationError) as exc:
            project_prelogits(LinearModel.zeros(3, 2), np.zeros(2), (0, 1, 2))
        assert exc.value.code == "invalid-model"

    def test_needs_distinct_classes(self, mlp):
        with pytest.raises(ValidationError) as exc:
            project_prelogits(mlp, np.zeros(5), (0, 0, 1))
        assert exc.value.code == "invalid-classes"

    def test_dataset_projection_flags_noise(self, mlp, rng):
        clean = LabeledDataset(rng.normal(size=(8, 2)), [0, 1, 2, 3, 0, 1, 2, 3], 4)
        data = clean.with_noise([0, 1, 2, 3, 1, 1, 2, 3])
        points = prelogit_projection(mlp, data, (0, 1, 2))
        assert len(points) == 6
        assert [flag for _, flag in points] == [False, False, False, True, False, False]

    def test_centroid_distance(self):
        points = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]])
        distance = noisy_centroid_distance(points, np.array([0, 0, 0]), np.array([False, False, True]))
        assert distance == pytest.approx(3.0)
        assert noisy_centroid_distance(points, np.zeros(3, dtype=int), np.zeros(3, dtype=bool)) is None


class TestEvaluateRun:
    def test_report_on_noisy_training_set(self, separable_blobs):
        noisy = separable_blobs.with_noise(
            np.where(np.arange(200) % 10 == 0, 1 - separable_blobs.observed_labels, separable_blobs.observed_labels)
        )
        model, _ = train(LinearModel.zeros(2, 2), noisy, LossSpec.standard(),
                         TrainConfig(epochs=10, lr_drop_epochs=()))
        report = evaluate_run(model, noisy, separable_blobs, method="baseline", seed=0, with_gaps=True)
        assert report.train_accuracy_clean_true >= 0.99
        assert report.train_accuracy_noisy_observed <= 0.05
        assert report.test_accuracy >= 0.99
        assert 0.0 <= report.ece <= 1.0
        assert set(report.gap_samples) == {"clean_observed", "noisy_observed", "clean_clean", "noisy_clean"}

    def test_clean_training_set_counts_as_all_clean(self, separable_blobs):
        report = evaluate_run(LinearModel.zeros(2, 2), separable_blobs, separable_blobs)
        assert report.train_accuracy_noisy_true is None
        assert report.train_accuracy_full_true == report.train_accuracy_clean_true
