"""Figure rendering for irssim CSV/manifest outputs."""

from .io import CsvFormatError, read_kpi, read_manifest_overlay, read_rem, read_sweep
from .render import KINDS, PlotJob, render

__version__ = "0.1.0"

__all__ = [
    "CsvFormatError",
    "read_kpi",
    "read_manifest_overlay",
    "read_rem",
    "read_sweep",
    "KINDS",
    "PlotJob",
    "render",
    "__version__",
]
