"""
Configuration management for the label smearing toolkit.
"""
import os
from pathlib import Path
from typing import Dict, Any, Optional

try:
    from dotenv import load_dotenv
except ImportError:  # python-dotenv is optional
    load_dotenv = None

# Base directory
BASE_DIR = Path(__file__).resolve().parent

if load_dotenv is not None:
    load_dotenv(BASE_DIR / ".env")

# Storage configuration
DATA_DIR = BASE_DIR / "storage"
DEFAULT_EXPERIMENT_FILE = Path(
    os.getenv("LSM_DEFAULT_EXPERIMENT", str(DATA_DIR / "default_experiment.json"))
)
OUTPUT_DIR = Path(os.getenv("LSM_OUTPUT_DIR", str(BASE_DIR / "results")))

# Figure emission configuration
FIGURE_SETTINGS_FILE = BASE_DIR / "visualization" / "figure_settings.json"

# Application settings
APP_NAME = "Label Smearing Lab"
VERSION = "1.0.0"
SCHEMA_VERSION = 1

# Logging configuration
LOG_LEVEL = os.getenv("LSM_LOG_LEVEL", "INFO")
_log_file = os.getenv("LSM_LOG_FILE", "")
LOG_FILE: Optional[Path] = Path(_log_file) if _log_file else None

# Performance settings
JOBS = int(os.getenv("LSM_JOBS", "1"))
MAX_CLASSES = int(os.getenv("LSM_MAX_CLASSES", "10000"))


def get_config() -> Dict[str, Any]:
    """Get all configuration as a dictionary."""
    return {
        "data_dir": str(DATA_DIR),
        "default_experiment": str(DEFAULT_EXPERIMENT_FILE),
        "output_dir": str(OUTPUT_DIR),
        "figure_settings": str(FIGURE_SETTINGS_FILE),
        "app_name": APP_NAME,
        "version": VERSION,
        "schema_version": SCHEMA_VERSION,
        "log_level": LOG_LEVEL,
        "log_file": str(LOG_FILE) if LOG_FILE else None,
        "jobs": JOBS,
        "max_classes": MAX_CLASSES,
    }
