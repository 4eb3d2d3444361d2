"""Publication-style figures from the simulation CLI's CSV files."""

from .figspec import FigureSpec, PanelSpec, SeriesSpec, SpecError, load_spec
from .render import kingman_reference, logit, render

__version__ = "0.1.0"
