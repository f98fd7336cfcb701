"""Readers and aggregation for the versioned CSV formats the estimator
package emits.

This package consumes those files blind: nothing here imports the
estimation code, the schema headers are the whole contract.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

RESULTS_SCHEMA = "ggm-results-v1"
ANALYSIS_SCHEMA = "ggm-analysis-v1"


class SchemaError(ValueError):
    """The input file does not carry the expected schema header."""


@dataclass(frozen=True)
class ResultRecord:
    model_id: int
    replicate: int
    T: int
    estimator: str
    k: int | None
    normalized_mse: float
    frobenius_error: float
    max_asymmetry: float
    solver_residual: float
    wall_time_sec: float
    pd_flag: bool
    error: str


@dataclass(frozen=True)
class Aggregate:
    """Per (estimator, T) summary: sample mean and standard error."""

    estimator: str
    T: int
    n: int
    mean: float
    stderr: float


def _read_rows(path, expected_schema: str) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != f"# {expected_schema}":
            raise SchemaError(
                f"{path} does not start with '# {expected_schema}' (got {first!r})"
            )
        return list(csv.DictReader(fh))


def read_results(path) -> list[ResultRecord]:
    """Parse a results CSV, schema ``ggm-results-v1``."""
    records = []
    for row in _read_rows(path, RESULTS_SCHEMA):
        records.append(
            ResultRecord(
                model_id=int(row["model_id"]),
                replicate=int(row["replicate"]),
                T=int(row["T"]),
                estimator=row["estimator"],
                k=int(row["k"]) if row["k"] else None,
                normalized_mse=float(row["normalized_mse"]),
                frobenius_error=float(row["frobenius_error"]),
                max_asymmetry=float(row["max_asymmetry"]),
                solver_residual=float(row["solver_residual"]),
                wall_time_sec=float(row["wall_time_sec"]),
                pd_flag=bool(int(row["pd_flag"])),
                error=row["error"],
            )
        )
    return records


def read_predictions(path) -> dict[str, float]:
    """Asymptotic T*MSE predictions from an analysis CSV, keyed by estimator."""
    predictions = {}
    for row in _read_rows(path, ANALYSIS_SCHEMA):
        if row["quantity"] == "asymptotic_tmse":
            predictions[row["estimator"]] = float(row["value"])
    return predictions


def aggregate_by_estimator_T(records, value) -> list[Aggregate]:
    """Group successful records by (estimator, T) and summarize ``value``.

    ``value`` maps a record to the number being averaged.  Records whose
    error field is set are excluded; they carry no metrics.  Sums run
    sequentially in row order and the standard error uses the n-1 sample
    variance, so a recomputation with the same formula reproduces the
    output bit for bit.
    """
    groups: dict[tuple[str, int], list[float]] = {}
    for rec in records:
        if rec.error:
            continue
        groups.setdefault((rec.estimator, rec.T), []).append(float(value(rec)))

    out = []
    for (estimator, T) in sorted(groups):
        vals = groups[(estimator, T)]
        n = len(vals)
        mean = sum(vals) / n
        if n > 1:
            variance = sum((v - mean) ** 2 for v in vals) / (n - 1)
            stderr = math.sqrt(variance) / math.sqrt(n)
        else:
            stderr = 0.0
        out.append(Aggregate(estimator=estimator, T=T, n=n, mean=mean, stderr=stderr))
    return out
