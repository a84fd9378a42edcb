import json
import math

import numpy as np
import pytest

import config
from core.dataset import LabeledDataset
from core.models import LinearModel, MlpModel
from core.synthlab import SeparatorRecord
from visualization.figure_builder import FigureBuilder


@pytest.fixture
def builder() -> FigureBuilder:
    return FigureBuilder(config.FIGURE_SETTINGS_FILE)


class TestSettings:
    def test_missing_file_falls_back_to_defaults(self, tmp_path):
        fallback = FigureBuilder(tmp_path / "missing.json")
        assert fallback.settings["marginPoints"] == 401

    def test_broken_file_falls_back_to_defaults(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        assert FigureBuilder(path).settings["lossCurveAlpha"] == 0.2

    def test_partial_file_is_merged(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"marginPoints": 11}), encoding="utf-8")
        partial = FigureBuilder(path)
        assert len(partial.margin_grid()) == 11
        assert partial.settings["figure5Epochs"] == 100


class TestLossCurves:
    def test_table_shape(self, builder):
        header, rows = builder.loss_curves()
        assert header == ["margin", "smoothing", "backward", "forward"]
        assert len(rows) == 401
        assert rows[0][0] == pytest.approx(-10.0)
        assert rows[-1][0] == pytest.approx(10.0)

    def test_curve_shapes(self, builder):
        _, rows = builder.loss_curves()
        margins = np.array([r[0] for r in rows])
        smoothing = np.array([r[1] for r in rows])
        backward = np.array([r[2] for r in rows])
        forward = np.array([r[3] for r in rows])
        assert abs(margins[np.argmin(smoothing)] - math.log(9)) <= 0.05
        assert backward[-1] < 0.0
        assert forward[0] == pytest.approx(-math.log(0.2), abs=1e-3)


class TestTables:
    def test_gap_tables(self, builder):
        data = LabeledDataset(np.zeros((4, 2)), [0, 1, 0, 1], 2).with_noise([0, 1, 1, 1])
        tables = builder.gap_tables(LinearModel.zeros(2, 2), data)
        assert set(tables) == {"clean_observed", "noisy_observed", "clean_clean", "noisy_clean"}
        header, rows = tables["clean_observed"]
        assert header == ["gap"]
        assert len(rows) == 3

    def test_separator_tables(self, builder):
        records = [SeparatorRecord("clean", 0.0, 0, 0.1), SeparatorRecord("clean", 0.0, 1, 0.3)]
        header, rows = builder.figure5_table(records)
        assert header == ["setting", "alpha_or_l2", "offset_mean", "offset_std"]
        assert rows[0][0] == "clean"
        assert rows[0][2] == pytest.approx(0.2)
        assert len(builder.figure5_runs_table(records)[1]) == 2

    def test_projection_table(self, builder, rng):
        model = MlpModel(rng.normal(size=(4, 2)), np.zeros(4), rng.normal(size=(3, 4)), np.zeros(3))
        data = LabeledDataset(rng.normal(size=(6, 2)), [0, 1, 2, 0, 1, 2], 3)
        header, rows = builder.projection_table(model, data)
        assert header == ["u", "v", "noisy"]
        assert len(rows) == 6
        assert not any(row[2] for row in rows)

    def test_alpha_sweep_table(self, builder):
        assert builder.alpha_sweep_table([(0.0, 0.8), (0.1, 0.85)]) == (
            ["alpha", "student_test_accuracy"], [[0.0, 0.8], [0.1, 0.85]]
        )
