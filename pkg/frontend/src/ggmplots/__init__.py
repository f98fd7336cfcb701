"""Figure rendering for ggmest benchmark CSVs."""

from .data import (
    ANALYSIS_SCHEMA,
    RESULTS_SCHEMA,
    Aggregate,
    ResultRecord,
    SchemaError,
    aggregate_by_estimator_T,
    read_predictions,
    read_results,
)
from .figures import (
    ESTIMATOR_STYLE,
    FIGURES,
    PlotSpec,
    asymptotic_overlay_figure,
    mse_vs_T_figure,
    render_figures,
    robustness_figure,
    runtime_figure,
)

__version__ = "0.1.0"

__all__ = [
    "ANALYSIS_SCHEMA",
    "Aggregate",
    "ESTIMATOR_STYLE",
    "FIGURES",
    "PlotSpec",
    "RESULTS_SCHEMA",
    "ResultRecord",
    "SchemaError",
    "aggregate_by_estimator_T",
    "asymptotic_overlay_figure",
    "mse_vs_T_figure",
    "read_predictions",
    "read_results",
    "render_figures",
    "robustness_figure",
    "runtime_figure",
]
