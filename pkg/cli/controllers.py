"""
Experiment controller - business logic behind the command-line verbs.
"""
from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.dataset import LabeledDataset
from core.distill import (
    DISTILLATION_COLUMNS,
    DistillConfig,
    run_distillation_comparison,
    teacher_alpha_sweep,
)
from core.experiment import DistillBlock, ExperimentConfig, MethodConfig
from core.losses import LossKind, LossSpec
from core.matrices import TransitionMatrix, make_symmetric_transition, transition_from_alpha
from core.metrics import REPORT_FIELDS, RunReport, evaluate_run, predict_proba
from core.models import MlpModel, Model
from core.noise import InjectionMode, estimate_transition_percentile, inject_class_conditional, inject_symmetric
from core.synthlab import FIGURE5_TRANSITION_LABEL, figure5_experiment
from core.training import TrainConfig, TrainHistory, train
from storage.io_manager import (
    load_dataset_csv,
    load_transition_csv,
    save_checkpoint,
    save_matrix_csv,
    write_history_csv,
    write_table,
)
from utils.logger import current_level_name, get_logger, get_run_logger, init_worker_logging
from utils.validators import DivergenceError, MissingLabelsError
from visualization.figure_builder import FigureBuilder

logger = get_logger(__name__)

SUMMARY_METRICS = REPORT_FIELDS[4:]


def slug(text: str) -> str:
    """File-name-safe form of a method label."""
    return re.sub(r"[^A-Za-z0-9.]+", "_", text).strip("_")


def _mean_std(values: Sequence[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    return float(np.mean(present)), float(np.std(present))


def summarise_reports(reports: Sequence[RunReport], methods: Sequence[MethodConfig]) -> Tuple[List[str], List[List[Any]]]:
    """Mean and population std of every metric per method over the runs that finished."""
    header = ["method", "alpha", "runs", "diverged"]
    for name in SUMMARY_METRICS:
        header += [f"{name}_mean", f"{name}_std"]

    rows = []
    for method in methods:
        runs = [r for r in reports if r.method == method.label]
        finished = [r for r in runs if r.ok]
        row: List[Any] = [method.label, method.alpha, len(finished), len(runs) - len(finished)]
        for name in SUMMARY_METRICS:
            row += list(_mean_std([getattr(r, name) for r in finished]))
        rows.append(row)
    return header, rows


def _run_grid_point(payload: Tuple[Dict[str, Any], str, str, int, int]) -> RunReport:
    """Process-pool entry point: rebuild the controller and run one grid point."""
    cfg_dict, settings_path, output_dir, method_index, seed = payload
    controller = ExperimentController(
        ExperimentConfig.from_dict(cfg_dict), FigureBuilder(Path(settings_path)), Path(output_dir)
    )
    return controller.run_single(method_index, seed)


class ExperimentController:
    """
    Coordinates datasets, noise, training and result emission for one
    experiment config.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        figure_builder: FigureBuilder,
        output_dir: Path,
        jobs: int = 1,
        save_artifacts: bool = True,
    ) -> None:
        """
        Initialize controller.

        Args:
            cfg: Parsed experiment config
            figure_builder: Figure table builder
            output_dir: Directory all CSVs are written under
            jobs: Worker processes for the method × seed grid
            save_artifacts: Also write per-run histories and checkpoints
        """
        self.cfg = cfg
        self.figures = figure_builder
        self.output_dir = output_dir
        self.jobs = max(1, int(jobs))
        self.save_artifacts = save_artifacts
        self._transition_file: Optional[TransitionMatrix] = None

    # ========== Data ==========

    def load_splits(self, seed: int) -> Tuple[LabeledDataset, LabeledDataset]:
        """Clean (train, test) splits for one seed."""
        ds = self.cfg.dataset
        if ds.source == "csv":
            train = load_dataset_csv(Path(ds.train_path), has_clean=ds.has_clean_column)
            # the test split may miss the largest class; L comes from train
            test = load_dataset_csv(Path(ds.test_path), num_classes=train.num_classes,
                                    has_clean=ds.has_clean_column)
            return train, test
        return ds.generate(seed)

    def file_transition(self) -> TransitionMatrix:
        if self._transition_file is None:
            self._transition_file = load_transition_csv(Path(self.cfg.noise.transition_file))
        return self._transition_file

    def true_transition(self, num_classes: int) -> Optional[TransitionMatrix]:
        """The transition the configured noise process applies, if any."""
        noise = self.cfg.noise
        if noise.kind == "class-conditional":
            return self.file_transition()
        if noise.kind == "symmetric":
            if InjectionMode(noise.mode) == InjectionMode.RESAMPLE_ANY:
                # redrawing from all L classes keeps the label with prob 1 − ρ + ρ/L
                return transition_from_alpha(num_classes, noise.rho)
            return make_symmetric_transition(num_classes, noise.rho)
        return None

    def corrupt(self, train_data: LabeledDataset, seed: int) -> LabeledDataset:
        """Inject the configured noise; datasets that arrive noisy are kept."""
        noise = self.cfg.noise
        if noise.kind == "none":
            return train_data
        if train_data.is_noisy:
            logger.info("Training split already carries noisy labels; skipping injection")
            return train_data
        if noise.kind == "symmetric":
            return inject_symmetric(train_data, noise.rho, InjectionMode(noise.mode), seed)
        return inject_class_conditional(train_data, self.file_transition(), seed)

    def train_config(self, seed: int, base: Optional[TrainConfig] = None) -> TrainConfig:
        base = base or self.cfg.train
        return TrainConfig.from_dict({**base.to_dict(), "seed": seed})

    def build_model(self, data: LabeledDataset, seed: int) -> Model:
        return self.cfg.model.build(data.num_features, data.num_classes, seed)

    # ========== Transition sources ==========

    def estimate_for(self, noisy_train: LabeledDataset, seed: int) -> TransitionMatrix:
        """Percentile estimate from a baseline model trained on the noisy split."""
        model, _ = train(self.build_model(noisy_train, seed), noisy_train,
                         LossSpec.standard(), self.train_config(seed))
        return estimate_transition_percentile(predict_proba(model, noisy_train.features),
                                              self.cfg.percentile)

    def resolve_spec(self, method: MethodConfig, noisy_train: LabeledDataset, seed: int) -> LossSpec:
        """Turn a method entry into a LossSpec, fetching T from its source."""
        kind = LossKind(method.kind)
        if kind == LossKind.STANDARD:
            return LossSpec.standard()
        if kind == LossKind.SMOOTHING:
            return LossSpec.smoothing(method.alpha)

        L = noisy_train.num_classes
        if method.transition == "smoothing":
            T = transition_from_alpha(L, method.alpha)
        elif method.transition == "noise":
            T = self.true_transition(L)
            if T is None:
                T = transition_from_alpha(L, 0.0)
        elif method.transition == "estimated":
            T = self.estimate_for(noisy_train, seed)
        else:
            T = self.file_transition()

        if kind == LossKind.BACKWARD:
            return LossSpec.backward(T, method.alpha)
        return LossSpec.forward(T, method.alpha)

    # ========== Runs ==========

    def train_method(self, method: MethodConfig, seed: int
                     ) -> Tuple[Model, TrainHistory, LabeledDataset, LabeledDataset]:
        clean_train, test = self.load_splits(seed)
        noisy_train = self.corrupt(clean_train, seed)
        spec = self.resolve_spec(method, noisy_train, seed)
        model, history = train(self.build_model(noisy_train, seed), noisy_train, spec,
                               self.train_config(seed), eval_data=test)
        return model, history, noisy_train, test

    def run_single(self, method_index: int, seed: int) -> RunReport:
        """
        Train and evaluate one grid point; divergence is recorded, not raised.
        """
        method = self.cfg.methods[method_index]
        run_log = get_run_logger(__name__, method.label, seed)
        try:
            model, history, noisy_train, test = self.train_method(method, seed)
        except DivergenceError as e:
            run_log.warning(f"diverged at epoch {e.epoch}: {e}")
            return RunReport.diverged(method.label, method.alpha, seed)

        if self.save_artifacts:
            name = f"{slug(method.label)}_seed{seed}"
            write_history_csv(self.output_dir / "history" / f"{name}.csv", history.to_rows())
            save_checkpoint(model, self.output_dir / "models" / f"{name}.npz")
        report = evaluate_run(model, noisy_train, test, method.label, method.alpha, seed,
                              bins=self.cfg.ece_bins)
        run_log.info(f"finished, test accuracy {report.test_accuracy}")
        return report

    def run_grid(self) -> List[RunReport]:
        points = [(i, seed) for seed in self.cfg.seeds for i in range(len(self.cfg.methods))]
        if self.jobs == 1 or len(points) == 1:
            reports = [self.run_single(i, seed) for i, seed in points]
        else:
            payloads = [(self.cfg.to_dict(), str(self.figures.settings_path), str(self.output_dir), i, seed)
                        for i, seed in points]
            with ProcessPoolExecutor(max_workers=self.jobs, initializer=init_worker_logging,
                                     initargs=(current_level_name(),)) as pool:
                reports = list(pool.map(_run_grid_point, payloads))
        return reports

    def run_experiment(self) -> List[List[Any]]:
        """
        Run every (method, seed) grid point and write ``runs.csv`` and
        ``summary.csv``.

        Returns:
            Summary rows (one per method)
        """
        logger.info(
            f"Running '{self.cfg.name}': {len(self.cfg.methods)} methods x {len(self.cfg.seeds)} seeds, "
            f"jobs={self.jobs}"
        )
        reports = self.run_grid()
        write_table(self.output_dir / "runs.csv", REPORT_FIELDS, [r.to_row() for r in reports], "runs")
        header, rows = summarise_reports(reports, self.cfg.methods)
        write_table(self.output_dir / "summary.csv", header, rows, "summary")

        diverged = sum(1 for r in reports if not r.ok)
        if diverged:
            logger.warning(f"{diverged} runs diverged and are flagged in runs.csv")
        return rows

    # ========== Figures ==========

    def emit_figures(self) -> List[Path]:
        """Write every figure table under ``<output>/figures``."""
        out = self.output_dir / "figures"
        s = self.figures.settings
        written = []

        header, rows = self.figures.loss_curves()
        written.append(write_table(out / "loss_curves.csv", header, rows, "loss-curves",
                                   {"alpha": s["lossCurveAlpha"], "rho": s["lossCurveRho"],
                                    "label": s["lossCurveLabel"]}))

        fig5_train = TrainConfig.from_dict({**self.cfg.train.to_dict(),
                                            "epochs": int(s["figure5Epochs"]),
                                            "lr_drop_epochs": [], "weight_decay": 0.0})
        records = figure5_experiment(s["figure5Alphas"], s["figure5L2Coeffs"], self.cfg.seeds,
                                     int(s["figure5SamplesPerClass"]), fig5_train)
        meta = {"transition": FIGURE5_TRANSITION_LABEL}
        header, rows = self.figures.figure5_table(records)
        written.append(write_table(out / "figure5.csv", header, rows, "figure5", meta))
        header, rows = self.figures.figure5_runs_table(records)
        written.append(write_table(out / "figure5_runs.csv", header, rows, "figure5-runs", meta))

        for method in self.cfg.methods:
            for seed in self.cfg.seeds:
                written += self._emit_run_figures(method, seed, out)

        if self.cfg.distill is not None:
            header, rows = self.figures.alpha_sweep_table(self.alpha_sweep())
            written.append(write_table(out / "alpha_sweep.csv", header, rows, "alpha-sweep"))
        return written

    def _emit_run_figures(self, method: MethodConfig, seed: int, out: Path) -> List[Path]:
        try:
            model, _, noisy_train, _ = self.train_method(method, seed)
        except DivergenceError as e:
            logger.warning(f"Skipping figures for {method.label} seed={seed}: {e}")
            return []

        name = f"{slug(method.label)}_seed{seed}"
        written = []
        try:
            for key, (header, rows) in self.figures.gap_tables(model, noisy_train).items():
                written.append(write_table(out / "gaps" / f"{name}_{key}.csv", header, rows, "gaps",
                                           {"method": method.label, "seed": seed, "split": key}))
        except MissingLabelsError:
            logger.warning(f"No clean labels for {method.label} seed={seed}; gap files skipped")

        if isinstance(model, MlpModel) and noisy_train.num_classes >= 3:
            header, rows = self.figures.projection_table(model, noisy_train)
            written.append(write_table(out / "projections" / f"{name}.csv", header, rows, "projection",
                                       {"method": method.label, "seed": seed}))
        return written

    # ========== Distillation ==========

    def distill_config(self, seed: int) -> DistillConfig:
        block = self.cfg.distill
        return DistillConfig(
            temperature=block.temperature,
            teacher_train=self.train_config(seed),
            student_train=self.train_config(seed, self.cfg.student_train()),
        )

    def alpha_sweep(self) -> List[Tuple[float, float]]:
        """Student accuracy per teacher alpha, averaged over seeds."""
        per_alpha: Dict[float, List[float]] = {}
        for seed in self.cfg.seeds:
            clean_train, test = self.load_splits(seed)
            noisy_train = self.corrupt(clean_train, seed)
            sweep = teacher_alpha_sweep(
                self.cfg.distill.sweep_alphas, noisy_train, self.distill_config(seed),
                self.build_model(noisy_train, seed), self.build_model(noisy_train, seed), test, seed,
            )
            for alpha, accuracy in sweep:
                per_alpha.setdefault(alpha, []).append(accuracy)
        return [(alpha, float(np.mean(accs))) for alpha, accs in per_alpha.items()]

    def run_distillation(self) -> List[List[Any]]:
        """
        Five-column distillation comparison over seeds plus the teacher
        alpha sweep.

        Returns:
            Summary rows (method, mean, std)
        """
        if self.cfg.distill is None:
            self.cfg.distill = DistillBlock()
        block = self.cfg.distill
        per_column: Dict[str, List[float]] = {c: [] for c in DISTILLATION_COLUMNS}
        run_rows = []
        for seed in self.cfg.seeds:
            clean_train, test = self.load_splits(seed)
            noisy_train = self.corrupt(clean_train, seed)
            results = run_distillation_comparison(
                noisy_train, test,
                self.build_model(noisy_train, seed), self.build_model(noisy_train, seed),
                self.distill_config(seed), alpha=block.alpha, seed=seed,
            )
            for column in DISTILLATION_COLUMNS:
                per_column[column].append(results[column])
                run_rows.append([column, seed, results[column]])

        meta = {"temperature": block.temperature, "alpha": block.alpha}
        write_table(self.output_dir / "distillation_runs.csv", ["method", "seed", "test_accuracy"],
                    run_rows, "distillation-runs", meta)
        summary = [[c, float(np.mean(v)), float(np.std(v))] for c, v in per_column.items()]
        write_table(self.output_dir / "distillation.csv", ["method", "mean", "stddev"],
                    summary, "distillation", meta)

        header, rows = self.figures.alpha_sweep_table(self.alpha_sweep())
        write_table(self.output_dir / "alpha_sweep.csv", header, rows, "alpha-sweep")
        return summary

    # ========== Transition estimation ==========

    def estimate_transition(self) -> Dict[int, TransitionMatrix]:
        """
        Percentile estimate of T per seed, written as matrix CSVs; the
        deviation from the injected T is logged when it is known.
        """
        estimates = {}
        for seed in self.cfg.seeds:
            clean_train, _ = self.load_splits(seed)
            noisy_train = self.corrupt(clean_train, seed)
            estimate = self.estimate_for(noisy_train, seed)
            save_matrix_csv(estimate, self.output_dir / f"transition_estimate_seed{seed}.csv")

            truth = self.true_transition(noisy_train.num_classes)
            if truth is not None:
                deviation = float(np.max(np.abs(estimate.entries - truth.entries)))
                logger.info(f"Seed {seed}: max |T_est - T| = {deviation:.4f}")
            estimates[seed] = estimate
        return estimates
