"""Publication-style figures from opeval sweep result CSVs."""

from .figures import (
    MIN_SERIES,
    EmptySelectionError,
    FigureSpec,
    MissingColumnError,
    ResultRow,
    cdf_curves,
    convergence_series,
    load_results,
    plot_cdf,
    plot_convergence,
)

__version__ = "0.1.0"
