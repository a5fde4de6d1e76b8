"""Figure rendering for kernel-dynamics experiment CSVs.

Four figure kinds over the CSV schemas the experiment CLI emits: network
outputs over epochs, init-kernel slices across widths, watched NTK entries
over epochs, and the smoothed MNIST diagonal traces.
"""

from .figures import FIGURE_KINDS, FigureSpec, build_figure, render
from .schema import CsvSchemaError, SchemaReport, validate_csv
from .smooth import moving_average

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "build_figure",
    "render",
    "CsvSchemaError",
    "SchemaReport",
    "validate_csv",
    "moving_average",
]
