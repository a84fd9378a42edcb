"""Storage and persistence layer."""
from .io_manager import (
    load_checkpoint,
    load_dataset_csv,
    load_experiment_config,
    load_or_init_config,
    load_transition_csv,
    read_table,
    save_checkpoint,
    save_dataset_csv,
    save_experiment_config,
    save_matrix_csv,
    write_history_csv,
    write_table,
)

__all__ = [
    "load_checkpoint",
    "load_dataset_csv",
    "load_experiment_config",
    "load_or_init_config",
    "load_transition_csv",
    "read_table",
    "save_checkpoint",
    "save_dataset_csv",
    "save_experiment_config",
    "save_matrix_csv",
    "write_history_csv",
    "write_table",
]
