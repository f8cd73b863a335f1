"""Figure rendering for miisac sweep CSVs."""

from .render import FigureSpec, SchemaError, read_sweep_csv, render

__version__ = "0.1.0"
