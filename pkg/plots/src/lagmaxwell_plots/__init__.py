"""Figure rendering for lagmaxwell run directories.

Consumes only the documented on-disk artifacts (residual CSVs, field-magnitude
PGMs, ``manifest.json``) and renders publication-style figures.  The solver
package is never imported; everything here is a pure file-to-file
transformation.
"""

from .io import (
    FieldDump,
    MalformedInputError,
    MixedScenarioError,
    ResidualCurve,
    load_field_dump,
    load_residual_curve,
    read_history,
    read_pgm,
    scenario_id_of,
)
from .figures import FigureSpec, RenderResult, plot_field, plot_residuals

__version__ = "0.1.0"

__all__ = [
    "FieldDump",
    "FigureSpec",
    "MalformedInputError",
    "MixedScenarioError",
    "RenderResult",
    "ResidualCurve",
    "load_field_dump",
    "load_residual_curve",
    "plot_field",
    "plot_residuals",
    "read_history",
    "read_pgm",
    "scenario_id_of",
]
