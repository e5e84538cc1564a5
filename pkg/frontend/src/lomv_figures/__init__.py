"""Figure rendering for lomv run directories.

Reads only the CSV/JSON artifacts written by the lomv CLI (schemas in the
main package's docs/formats.md); never recomputes any numeric result.
"""

__version__ = "0.1.0"

from .render import FigureSpec, RenderResult, plotted_checksum, render
from .schemas import SchemaError

__all__ = ["FigureSpec", "RenderResult", "SchemaError", "plotted_checksum", "render"]
