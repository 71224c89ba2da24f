"""Figure rendering for eqtrack summary CSVs."""

from .render import EXPECTED_HEADER, PlotSpec, SchemaError, extract_series, load_summary, render

__version__ = "0.1.0"
