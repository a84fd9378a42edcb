"""
Persistence - experiment configs, matrices, datasets, result tables and
model checkpoints.
"""
import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

import config
from core.dataset import LabeledDataset
from core.experiment import ExperimentConfig
from core.matrices import SmearingMatrix, TransitionMatrix
from core.models import Model, model_from_arrays
from utils.logger import get_logger
from utils.validators import ConfigError, DimensionMismatchError, EmptyInputError, ValidationError

logger = get_logger(__name__)


# ========== Experiment configs ==========

def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Load an experiment config from a JSON file.

    Raises:
        FileNotFoundError: If file doesn't exist
        ConfigError: If the file is not valid JSON or fails validation
    """
    if not path.exists():
        raise FileNotFoundError(f"Experiment config not found: {path}")

    logger.info(f"Loading experiment config from {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            data: Dict[str, Any] = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}")

    return ExperimentConfig.from_dict(data)


def save_experiment_config(cfg: ExperimentConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, ensure_ascii=False)
    logger.info(f"Saved experiment config to {path}")


def load_or_init_config(path: Path) -> ExperimentConfig:
    """
    Load the experiment config, or write the default document if the file
    doesn't exist.
    """
    if path.exists():
        return load_experiment_config(path)

    logger.info(f"No config at {path}, writing defaults")
    cfg = ExperimentConfig()
    save_experiment_config(cfg, path)
    return cfg


# ========== Tables ==========

def format_value(value: Any) -> str:
    """Deterministic text for a CSV cell; floats keep full precision."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metadata_line(kind: str, extra: Optional[Dict[str, Any]] = None) -> str:
    fields = {
        "schema_version": config.SCHEMA_VERSION,
        "kind": kind,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    fields.update(extra or {})
    return "# " + ",".join(f"{k}={v}" for k, v in fields.items())


def write_table(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    kind: str,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a UTF-8 CSV: one ``# key=value`` metadata line, the header, rows.

    Everything after the metadata line depends only on the data.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(metadata_line(kind, metadata) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_table(path: Path) -> List[Dict[str, str]]:
    """Rows of a CSV written by ``write_table`` (metadata lines skipped)."""
    with path.open("r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_history_csv(path: Path, history_rows: Iterable[Sequence[Any]]) -> Path:
    return write_table(path, ["epoch", "train_loss", "train_acc", "test_acc"], history_rows, "history")


# ========== Matrices ==========

def save_matrix_csv(matrix: Any, path: Path) -> Path:
    """One matrix row per line, full-precision decimals, no header."""
    entries = matrix.entries if isinstance(matrix, (TransitionMatrix, SmearingMatrix)) else np.asarray(matrix)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in entries:
            writer.writerow([repr(float(v)) for v in row])
    logger.info(f"Saved {entries.shape[0]}x{entries.shape[1]} matrix to {path}")
    return path


def load_transition_csv(path: Path) -> TransitionMatrix:
    """
    Read a transition matrix written by ``save_matrix_csv``.

    Raises:
        FileNotFoundError: If file doesn't exist
        ValidationError: If the matrix is not square and row-stochastic
    """
    if not path.exists():
        raise FileNotFoundError(f"Transition file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        rows = [[float(v) for v in row] for row in csv.reader(f) if row and not row[0].startswith("#")]
    return TransitionMatrix(rows)


# ========== Datasets ==========

def save_dataset_csv(data: LabeledDataset, path: Path) -> Path:
    """Columns x0..x{D-1}, observed[, clean]."""
    header = [f"x{j}" for j in range(data.num_features)] + ["observed"]
    if data.has_clean_labels:
        header.append("clean")
    rows = []
    for i in range(data.num_examples):
        row: List[Any] = list(data.features[i]) + [int(data.observed_labels[i])]
        if data.has_clean_labels:
            row.append(int(data.clean_labels[i]))
        rows.append(row)
    return write_table(path, header, rows, "dataset", {"classes": data.num_classes})


def _is_numeric_row(row: Sequence[str]) -> bool:
    try:
        [float(v) for v in row]
    except ValueError:
        return False
    return True


def load_dataset_csv(path: Path, num_classes: Optional[int] = None,
                     has_clean: Optional[bool] = None) -> LabeledDataset:
    """
    Read a dataset CSV: D feature columns, the observed label, then an
    optional clean label column.

    The first row is a header unless every field in it parses as a number.
    With a header the clean column is recognised by its name ``clean``;
    headerless files carry one only when ``has_clean`` is True.

    ``num_classes`` defaults to the ``classes`` metadata field, else to
    1 + the largest label present.
    """
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    with path.open("r", encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()

    meta: Dict[str, str] = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for item in line.lstrip("# ").split(","):
                if "=" in item:
                    key, value = item.split("=", 1)
                    meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)

    rows = list(csv.reader(body))
    if not rows:
        raise EmptyInputError(f"{path} has no rows")
    if _is_numeric_row(rows[0]):
        logger.debug(f"{path} has no header row")
        has_clean = bool(has_clean)
    else:
        header, rows = rows[0], rows[1:]
        named_clean = header[-1] == "clean"
        if has_clean is not None and has_clean != named_clean:
            raise ValidationError(
                f"{path}: header {'has' if named_clean else 'lacks'} a clean column",
                code="invalid-dataset",
            )
        has_clean = named_clean
        if not rows:
            raise EmptyInputError(f"{path} has a header but no rows")

    width = len(rows[0])
    label_columns = 2 if has_clean else 1
    if width <= label_columns:
        raise DimensionMismatchError(f"{path} has no feature columns")
    if any(len(row) != width for row in rows):
        raise DimensionMismatchError(f"{path} has rows of differing width")

    try:
        table = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise ValidationError(f"{path}: non-numeric value ({e})", code="invalid-dataset") from e
    table = table.reshape(-1, width)
    D = width - label_columns
    observed = table[:, D].astype(np.int64)
    clean = table[:, D + 1].astype(np.int64) if has_clean else None

    if num_classes is None:
        labels = observed if clean is None else np.concatenate([observed, clean])
        num_classes = int(meta["classes"]) if "classes" in meta else int(labels.max()) + 1
    return LabeledDataset(
        features=table[:, :D],
        observed_labels=observed,
        num_classes=num_classes,
        clean_labels=clean,
        noise_mask=None if clean is None else observed != clean,
    )


# ========== Checkpoints ==========

def save_checkpoint(model: Model, path: Path) -> Path:
    """Flat named parameter arrays in an ``.npz`` file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        np.savez(f, **model.to_arrays())
    logger.info(f"Saved checkpoint {model!r} to {path}")
    return path


def load_checkpoint(path: Path) -> Model:
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    with np.load(path) as archive:
        arrays = {name: archive[name] for name in archive.files}
    return model_from_arrays(arrays)
