"""Publication-style figures from resurp CSV outputs.

This package is a plotting layer only: every number comes from the
simulation engine's CSV files (trajectory records, effect rows, fit
points), and rendering never mutates its inputs.
"""

from resurp_figures.render import FigureSpec, RenderResult, render

__all__ = ["FigureSpec", "RenderResult", "render"]

__version__ = "0.1.0"
