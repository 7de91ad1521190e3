"""Figure package over the snlab CSV contract.

Consumes only the versioned CSV files the snlab CLI writes; the
simulation package itself is never imported.
"""

from .figures import (PlotSpec, plot_correlations, plot_screen_densities,
                      render_correlations, render_screens)
from .reader import CSV_SCHEMA, ContractError, Table, read_table

__all__ = [
    "CSV_SCHEMA",
    "ContractError",
    "PlotSpec",
    "Table",
    "plot_correlations",
    "plot_screen_densities",
    "read_table",
    "render_correlations",
    "render_screens",
]

__version__ = "0.1.0"
