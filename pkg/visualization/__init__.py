"""Figure table preparation."""
from .figure_builder import FigureBuilder

__all__ = ["FigureBuilder"]
