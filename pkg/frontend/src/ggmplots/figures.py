"""Figure rendering from result CSVs.

All validation happens before anything touches the output path, so a
failing render never leaves a file behind.  Inputs are opened read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 (backend must be pinned first)

from .data import Aggregate, aggregate_by_estimator_T, read_predictions, read_results

FIGURES = ("mse_vs_T", "asymptotic_overlay", "robustness", "runtime")

# one fixed style per estimator so figures stay comparable across runs
ESTIMATOR_STYLE = {
    "gml": ("tab:blue", "o"),
    "ave": ("tab:orange", "s"),
    "loc": ("tab:red", "^"),
    "rmml_k1": ("tab:red", "^"),
    "rmml_k2": ("tab:green", "D"),
    "rmml_k3": ("tab:purple", "v"),
}
_FALLBACK_STYLE = ("tab:gray", "x")

# estimator token in a results file -> matching prediction token
_PREDICTION_KEY = {"gml": "gml", "loc": "rmml_k1", "ave": "rmml_k1"}


@dataclass(frozen=True)
class PlotSpec:
    input_csv: Path
    figure: str
    output_path: Path
    predictions_csv: Path | None = None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(
                f"unknown figure {self.figure!r}; choose one of {', '.join(FIGURES)}"
            )


def _style(estimator: str):
    return ESTIMATOR_STYLE.get(estimator, _FALLBACK_STYLE)


def _by_estimator(aggregates: list[Aggregate]) -> dict[str, list[Aggregate]]:
    series: dict[str, list[Aggregate]] = {}
    for agg in aggregates:
        series.setdefault(agg.estimator, []).append(agg)
    for rows in series.values():
        rows.sort(key=lambda a: a.T)
    return series


def _require_rows(aggregates: list[Aggregate], path) -> None:
    if not aggregates:
        raise ValueError(f"empty selection: no usable result rows in {path}")


def _errorbar_axes(series, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for estimator in sorted(series):
        rows = series[estimator]
        color, marker = _style(estimator)
        ax.errorbar(
            [a.T for a in rows],
            [a.mean for a in rows],
            yerr=[a.stderr for a in rows],
            color=color,
            marker=marker,
            capsize=3,
            label=estimator,
        )
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    return fig, ax


def mse_vs_T_figure(records, source_path="results"):
    aggregates = aggregate_by_estimator_T(records, lambda r: r.normalized_mse)
    _require_rows(aggregates, source_path)
    fig, ax = _errorbar_axes(
        _by_estimator(aggregates), "samples T", "normalized MSE"
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    return fig


def asymptotic_overlay_figure(records, predictions: dict, source_path="results"):
    """Empirical T * squared-error symbols over the predicted limits."""
    aggregates = aggregate_by_estimator_T(
        records, lambda r: r.T * r.frobenius_error**2
    )
    _require_rows(aggregates, source_path)
    series = _by_estimator(aggregates)

    matched = {}
    for estimator in series:
        key = _PREDICTION_KEY.get(estimator, estimator)
        if key in predictions:
            matched[estimator] = predictions[key]
    if not matched:
        raise ValueError(
            "no asymptotic_tmse prediction rows match these estimators; "
            "pass the CSV written by `ggmest analyze` as the predictions input"
        )

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    all_T = sorted({a.T for rows in series.values() for a in rows})
    for estimator in sorted(series):
        rows = series[estimator]
        color, marker = _style(estimator)
        ax.errorbar(
            [a.T for a in rows],
            [a.mean for a in rows],
            yerr=[a.stderr for a in rows],
            color=color,
            marker=marker,
            linestyle="none",
            capsize=3,
            label=f"{estimator} empirical",
        )
        if estimator in matched:
            ax.hlines(
                matched[estimator],
                all_T[0],
                all_T[-1],
                color=color,
                linestyle="--",
                label=f"{estimator} asymptotic",
            )
    ax.set_xscale("log")
    ax.set_xlabel("samples T")
    ax.set_ylabel("T * squared Frobenius error")
    ax.legend(fontsize=8)
    return fig


def robustness_figure(records, source_path="results"):
    aggregates = aggregate_by_estimator_T(records, lambda r: r.normalized_mse)
    _require_rows(aggregates, source_path)
    fig, ax = _errorbar_axes(
        _by_estimator(aggregates), "samples T", "normalized MSE vs nominal truth"
    )
    ax.set_xscale("log")
    return fig


def runtime_figure(records, source_path="results"):
    aggregates = aggregate_by_estimator_T(records, lambda r: r.wall_time_sec)
    _require_rows(aggregates, source_path)
    fig, _ = _errorbar_axes(
        _by_estimator(aggregates), "samples T", "wall time per estimate (s)"
    )
    return fig


def render_figures(spec: PlotSpec) -> Path:
    """Render the requested figure and write it to ``spec.output_path``."""
    records = read_results(spec.input_csv)
    if spec.figure == "mse_vs_T":
        fig = mse_vs_T_figure(records, spec.input_csv)
    elif spec.figure == "robustness":
        fig = robustness_figure(records, spec.input_csv)
    elif spec.figure == "runtime":
        fig = runtime_figure(records, spec.input_csv)
    else:
        if spec.predictions_csv is None:
            raise ValueError(
                "asymptotic_overlay needs the prediction CSV written by "
                "`ggmest analyze`; none was given"
            )
        predictions = read_predictions(spec.predictions_csv)
        if not predictions:
            raise ValueError(
                f"{spec.predictions_csv} holds no asymptotic_tmse rows; "
                "expected the output of `ggmest analyze`"
            )
        fig = asymptotic_overlay_figure(records, predictions, spec.input_csv)

    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
