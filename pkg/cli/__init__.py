"""Command-line interface layer."""
from .commands import main
from .controllers import ExperimentController

__all__ = ["main", "ExperimentController"]
