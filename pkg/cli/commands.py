"""
Command-line verbs and argument definitions.
"""
import argparse
from pathlib import Path
from typing import List, Optional

import config
from .controllers import ExperimentController
from core.experiment import ExperimentConfig
from storage.io_manager import load_experiment_config, load_or_init_config
from utils.logger import get_logger
from utils.validators import ValidationError
from visualization.figure_builder import FigureBuilder

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

VERBS = ("run", "figures", "distill", "estimate-t")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="label-smearing",
        description=f"{config.APP_NAME} {config.VERSION}: label smoothing, loss correction and "
                    "distillation experiments under label noise",
    )
    parser.add_argument("verb", choices=VERBS, help="what to run")
    parser.add_argument("--config", type=Path, default=None,
                        help="experiment JSON (default: the bundled default experiment)")
    parser.add_argument("--jobs", type=int, default=config.JOBS,
                        help="worker processes for the method x seed grid")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="run a single seed instead of the configured list")
    parser.add_argument("--transition-file", type=Path, default=None,
                        help="CSV transition matrix (overrides noise.transition_file)")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Resolve the experiment config and apply command-line overrides.

    Raises:
        ConfigError: If the document is malformed or invalid
        FileNotFoundError: If an explicit --config path is missing
    """
    if args.config is not None:
        cfg = load_experiment_config(args.config)
    else:
        cfg = load_or_init_config(config.DEFAULT_EXPERIMENT_FILE)
    return cfg.with_overrides(
        seed=args.seed_override,
        output_dir=str(args.out) if args.out is not None else None,
        transition_file=str(args.transition_file) if args.transition_file is not None else None,
    )


def dispatch(verb: str, controller: ExperimentController) -> None:
    if verb == "run":
        controller.run_experiment()
    elif verb == "figures":
        controller.emit_figures()
    elif verb == "distill":
        controller.run_distillation()
    else:
        controller.estimate_transition()


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run a verb.

    Returns:
        0 on success, 2 for config errors, 1 for anything else
    """
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args)
    except (ValidationError, FileNotFoundError) as e:
        logger.error(f"Config error: {e}")
        return EXIT_CONFIG

    output_dir = Path(cfg.output_dir) if cfg.output_dir else config.OUTPUT_DIR
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        controller = ExperimentController(
            cfg, FigureBuilder(config.FIGURE_SETTINGS_FILE), output_dir, jobs=args.jobs
        )
        dispatch(args.verb, controller)
    except Exception as e:
        logger.exception(f"'{args.verb}' failed: {e}")
        return EXIT_FAILURE

    logger.info(f"'{args.verb}' finished; results in {output_dir}")
    return EXIT_OK
