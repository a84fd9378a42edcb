"""
Figure data preparation.

Builds the plain tables behind each plot (loss curves, confidence-gap
samples, separator offsets, pre-logit projections, distillation sweeps).
Rendering happens downstream; this module only produces rows.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from core.dataset import LabeledDataset
from core.losses import LossSpec, loss_curve
from core.matrices import make_symmetric_transition
from core.metrics import gap_samples_by_split, prelogit_projection
from core.models import Model, MlpModel
from core.synthlab import SeparatorRecord, summarise_offsets
from utils.logger import get_logger

logger = get_logger(__name__)

Table = Tuple[List[str], List[List[Any]]]


class FigureBuilder:
    """
    Prepares figure tables from models and experiment results.

    Handles:
    - Loss curves along the binary margin
    - Gap samples per (data split, label source)
    - Separator offset summaries
    - Pre-logit projections
    """

    def __init__(self, settings_path: Path) -> None:
        """
        Initialize builder.

        Args:
            settings_path: Path to figure settings JSON
        """
        self.settings_path = settings_path
        self.settings: Dict[str, Any] = self._load_settings()

    def _load_settings(self) -> Dict[str, Any]:
        """Load figure settings from JSON file."""
        defaults = self._get_default_settings()
        if not self.settings_path.exists():
            logger.warning(f"Figure settings not found: {self.settings_path}. Using defaults.")
            return defaults

        try:
            with self.settings_path.open("r", encoding="utf-8") as f:
                settings = json.load(f)
            logger.info(f"Loaded figure settings from {self.settings_path}")
            return {**defaults, **settings}
        except Exception as e:
            logger.warning(f"Error loading figure settings: {e}. Using defaults.")
            return defaults

    def _get_default_settings(self) -> Dict[str, Any]:
        return {
            "marginMin": -10.0,
            "marginMax": 10.0,
            "marginPoints": 401,
            "lossCurveLabel": 0,
            "lossCurveAlpha": 0.2,
            "lossCurveRho": 0.2,
            "gapUseLogits": False,
            "projectionClasses": [0, 1, 2],
            "figure5Alphas": [0.0, 0.2, 0.4, 0.7],
            "figure5L2Coeffs": [0.0, 0.01, 0.1, 1.0],
            "figure5SamplesPerClass": 500,
            "figure5Epochs": 100,
        }

    def margin_grid(self) -> np.ndarray:
        s = self.settings
        return np.linspace(float(s["marginMin"]), float(s["marginMax"]), int(s["marginPoints"]))

    def loss_curves(self) -> Table:
        """
        Smoothing, backward and forward losses along f = [m, 0].

        Backward and forward use the symmetric transition at ``lossCurveRho``.
        """
        grid = self.margin_grid()
        label = int(self.settings["lossCurveLabel"])
        T = make_symmetric_transition(2, float(self.settings["lossCurveRho"]))
        specs = [
            LossSpec.smoothing(float(self.settings["lossCurveAlpha"])),
            LossSpec.backward(T),
            LossSpec.forward(T),
        ]
        columns = [[value for _, value in loss_curve(spec, label, grid)] for spec in specs]
        rows = [[float(m)] + [col[i] for col in columns] for i, m in enumerate(grid)]
        logger.debug(f"Built loss curves over {len(rows)} margins")
        return ["margin", "smoothing", "backward", "forward"], rows

    def gap_tables(self, model: Model, train_data: LabeledDataset) -> Dict[str, Table]:
        """One single-column table per ``<split>_<label source>`` key."""
        samples = gap_samples_by_split(model, train_data, bool(self.settings["gapUseLogits"]))
        return {key: (["gap"], [[float(v)] for v in values]) for key, values in samples.items()}

    def figure5_table(self, records: Sequence[SeparatorRecord]) -> Table:
        rows = [list(row) for row in summarise_offsets(records)]
        return ["setting", "alpha_or_l2", "offset_mean", "offset_std"], rows

    def figure5_runs_table(self, records: Sequence[SeparatorRecord]) -> Table:
        return (["setting", "alpha_or_l2", "seed", "offset"],
                [[r.setting, r.value, r.seed, r.offset] for r in records])

    def projection_table(self, model: MlpModel, train_data: LabeledDataset) -> Table:
        classes = [int(c) for c in self.settings["projectionClasses"]]
        points = prelogit_projection(model, train_data, classes)
        return ["u", "v", "noisy"], [[u, v, flag] for (u, v), flag in points]

    def alpha_sweep_table(self, sweep: Sequence[Tuple[float, float]]) -> Table:
        return ["alpha", "student_test_accuracy"], [[a, acc] for a, acc in sweep]
