"""Experiment harness: config-driven Monte Carlo runs with CSV output.

A run is a grid over (model, replicate, sample size, estimator) cells.
Every stochastic choice draws from a substream keyed by the master seed
and the cell indices, so the produced rows are a pure function of the
configuration regardless of worker count or scheduling.  Wall times are
measured per estimate but written as zero unless ``record_timings`` is
set, keeping the default CSV byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .estimators import gml_estimate, rmml_estimate, symmetrize
from .graph import Graph, tilde_edge_set
from .models import (
    GgmModel,
    SampleCovariance,
    knn_model,
    lattice_model,
    perturb_nonedges,
    read_model,
    sample_covariance,
    sample_gaussian,
    small_world_model,
)
from .seeding import substream
from .solver import SolverConfig, SolverError, solve_constrained_mle
from .solver import (
    DegenerateSupportError,
    NonconvergenceError,
    NotPositiveDefiniteError,
    SingularLocalCovarianceError,
)

RESULTS_SCHEMA = "ggm-results-v1"
ANALYSIS_SCHEMA = "ggm-analysis-v1"

RESULT_COLUMNS = (
    "model_id",
    "replicate",
    "T",
    "estimator",
    "k",
    "normalized_mse",
    "frobenius_error",
    "max_asymmetry",
    "solver_residual",
    "wall_time_sec",
    "pd_flag",
    "error",
)

_FAMILIES = ("knn", "lattice", "small_world", "from_file")
_FAMILY_PARAM_KEYS = {
    "knn": {"p", "K", "decay"},
    "lattice": {"rows", "cols", "mean", "variance"},
    "small_world": {"p", "K", "beta", "weight_low", "weight_high"},
    "from_file": {"prefix"},
}
_ESTIMATOR_RE = re.compile(r"^rmml_k([1-9][0-9]*)$")


def _estimator_hops(token: str):
    """Return the hop count of an estimator token, or None for gml."""
    if token == "gml":
        return None
    if token in ("loc", "ave"):
        return 1
    m = _ESTIMATOR_RE.match(token)
    if m:
        return int(m.group(1))
    raise ValueError(f"unknown estimator token {token!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    family_params: dict
    n_models: int
    n_reps_per_model: int
    T_grid: tuple
    estimators: tuple
    master_seed: int
    perturbation: float | None = None
    workers: int = 1
    node_workers: int = 1
    record_timings: bool = False
    output_path: str | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        allowed = _FAMILY_PARAM_KEYS[self.family]
        unknown = set(self.family_params) - allowed
        if unknown:
            raise ValueError(f"unknown family_params keys for {self.family}: {sorted(unknown)}")
        if self.n_models < 1 or self.n_reps_per_model < 1:
            raise ValueError("n_models and n_reps_per_model must be positive")
        if self.family == "from_file" and self.n_models != 1:
            raise ValueError("from_file runs must use n_models = 1")
        grid = tuple(int(t) for t in self.T_grid)
        if not grid or any(t < 1 for t in grid):
            raise ValueError("T_grid must be nonempty with positive entries")
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise ValueError("T_grid must be strictly ascending")
        object.__setattr__(self, "T_grid", grid)
        ests = tuple(self.estimators)
        if not ests:
            raise ValueError("estimators must be nonempty")
        if len(set(ests)) != len(ests):
            raise ValueError("duplicate estimator tokens")
        for tok in ests:
            _estimator_hops(tok)
        object.__setattr__(self, "estimators", ests)
        if self.perturbation is not None and self.perturbation < 0:
            raise ValueError("perturbation must be nonnegative")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.workers < 1 or self.node_workers < 1:
            raise ValueError("worker counts must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = {"family", "family_params", "n_models", "n_reps_per_model",
                   "T_grid", "estimators", "master_seed"} - set(d)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ValueError(f"invalid JSON in {path}: {e}") from None
        if not isinstance(data, dict):
            raise ValueError("config JSON must be an object")
        return cls.from_dict(data)


@dataclass
class ResultRow:
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
    error: str = ""


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_results(rows, path, record_timings: bool = False) -> None:
    """Write rows in canonical order under the versioned schema header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {RESULTS_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.model_id,
                    r.replicate,
                    r.T,
                    r.estimator,
                    "" if r.k is None else r.k,
                    _fmt(r.normalized_mse),
                    _fmt(r.frobenius_error),
                    _fmt(r.max_asymmetry),
                    _fmt(r.solver_residual),
                    _fmt(r.wall_time_sec if record_timings else 0.0),
                    int(r.pd_flag),
                    r.error,
                ]
            )


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# {RESULTS_SCHEMA}":
            raise ValueError(f"{path}: missing schema header {RESULTS_SCHEMA!r}")
        rows = []
        for rec in csv.DictReader(fh):
            rows.append(
                ResultRow(
                    model_id=int(rec["model_id"]),
                    replicate=int(rec["replicate"]),
                    T=int(rec["T"]),
                    estimator=rec["estimator"],
                    k=int(rec["k"]) if rec["k"] else None,
                    normalized_mse=float(rec["normalized_mse"]),
                    frobenius_error=float(rec["frobenius_error"]),
                    max_asymmetry=float(rec["max_asymmetry"]),
                    solver_residual=float(rec["solver_residual"]),
                    wall_time_sec=float(rec["wall_time_sec"]),
                    pd_flag=bool(int(rec["pd_flag"])),
                    error=rec["error"],
                )
            )
    return rows


def build_model(config: ExperimentConfig, model_id: int) -> GgmModel:
    """Deterministically build (or load) the model for one model slot."""
    seed = int(substream(config.master_seed, "model-seed", model_id).integers(2**63))
    fp = config.family_params
    if config.family == "knn":
        return knn_model(int(fp["p"]), int(fp["K"]), float(fp.get("decay", 0.5)), seed)
    if config.family == "lattice":
        return lattice_model(
            int(fp["rows"]), int(fp["cols"]),
            float(fp.get("mean", 0.5)), float(fp.get("variance", 0.2)), seed,
        )
    if config.family == "small_world":
        return small_world_model(
            int(fp["p"]), int(fp["K"]), float(fp["beta"]),
            float(fp.get("weight_low", 0.2)), float(fp.get("weight_high", 0.8)), seed,
        )
    return read_model(fp["prefix"])


_ERROR_CODES = (
    (SingularLocalCovarianceError, "singular_local_covariance"),
    (DegenerateSupportError, "degenerate_support"),
    (NotPositiveDefiniteError, "not_positive_definite"),
    (NonconvergenceError, "nonconvergence"),
    (SolverError, "solver_error"),
)


def _error_code(exc: Exception) -> str:
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    return "error"


def _min_symmetric_eig(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((matrix + matrix.T) * 0.5)[0])


def run_single_estimate(
    token: str,
    sigma_hat: SampleCovariance,
    graph: Graph,
    truth_dense: np.ndarray,
    solver_config: SolverConfig | None = None,
    node_workers: int = 1,
) -> "ResultRow":
    """Run one estimator token and return a metrics row (cell indices
    unfilled)."""
    hops = _estimator_hops(token)
    t0 = time.perf_counter()
    if token == "gml":
        report = gml_estimate(sigma_hat, graph, solver_config)
        presym_asym = 0.0
    else:
        report = rmml_estimate(sigma_hat, graph, hops, solver_config, workers=node_workers)
        presym_asym = report.max_asymmetry
        if token != "loc":
            report = symmetrize(report, graph)
    wall = time.perf_counter() - t0
    err = report.matrix - truth_dense
    fro = float(np.sqrt(np.sum(err**2)))
    nmse = float(np.sum(err**2) / np.sum(truth_dense**2))
    return ResultRow(
        model_id=-1,
        replicate=-1,
        T=sigma_hat.sample_count,
        estimator=token,
        k=hops,
        normalized_mse=nmse,
        frobenius_error=fro,
        max_asymmetry=presym_asym,
        solver_residual=report.max_residual,
        wall_time_sec=wall,
        pd_flag=_min_symmetric_eig(report.matrix) > 0.0,
    )


def _run_cell(args) -> list[ResultRow]:
    config, model_id, replicate, sampling_model, truth_dense = args
    solver_config = SolverConfig()
    rows = []
    for ti, T in enumerate(config.T_grid):
        rng = substream(config.master_seed, "samples", model_id, replicate, ti)
        X = sample_gaussian(sampling_model, T, rng)
        sc = sample_covariance(X)
        for token in config.estimators:
            try:
                row = run_single_estimate(
                    token, sc, sampling_model.graph, truth_dense,
                    solver_config, config.node_workers,
                )
            except SolverError as exc:
                row = ResultRow(
                    model_id=model_id, replicate=replicate, T=T, estimator=token,
                    k=_estimator_hops(token), normalized_mse=float("nan"),
                    frobenius_error=float("nan"), max_asymmetry=float("nan"),
                    solver_residual=float("nan"), wall_time_sec=0.0,
                    pd_flag=False, error=_error_code(exc),
                )
            row.model_id = model_id
            row.replicate = replicate
            row.T = T
            rows.append(row)
    return rows


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the full experiment grid and return rows in canonical order.

    Estimation always uses the nominal graph and measures errors against
    the nominal precision, even when sampling from a perturbed model.
    """
    cells = []
    for m in range(config.n_models):
        nominal = build_model(config, m)
        truth = nominal.precision.to_dense()
        sampling = nominal
        if config.perturbation is not None and config.perturbation > 0:
            pseed = int(substream(config.master_seed, "perturb-seed", m).integers(2**63))
            sampling = perturb_nonedges(nominal, config.perturbation, pseed)
            sampling = _attach_nominal_graph(sampling, nominal.graph)
        for r in range(config.n_reps_per_model):
            cells.append((config, m, r, sampling, truth))

    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        results = [_run_cell(c) for c in cells]

    rows = [row for cell_rows in results for row in cell_rows]
    if config.output_path:
        write_results(rows, config.output_path, config.record_timings)
    return rows


class _PerturbedSamplingModel:
    """Sampling wrapper that pairs a perturbed covariance with the nominal
    graph used for estimation."""

    def __init__(self, perturbed: GgmModel, nominal_graph: Graph):
        self._perturbed = perturbed
        self.graph = nominal_graph

    @property
    def p(self) -> int:
        return self._perturbed.p

    @property
    def covariance(self) -> np.ndarray:
        return self._perturbed.covariance


def _attach_nominal_graph(perturbed: GgmModel, nominal_graph: Graph):
    return _PerturbedSamplingModel(perturbed, nominal_graph)


def ingest_timeseries(csv_path, window: int, target_sparsity: float) -> GgmModel:
    """Fit a sparse model to a raw multivariate time series.

    Missing cells are filled by per-column linear interpolation, each
    column is detrended by subtracting its trailing moving average of
    length ``window`` (shorter prefixes average what is available), the
    detrended series' second-moment matrix is inverted, the smallest
    off-diagonal entries are zeroed to reach the target sparsity exactly
    (ties broken by index order), and the precision is re-fit on the
    resulting support.
    """
    if window < 1:
        raise ValueError("window must be positive")
    if not (0.0 <= target_sparsity <= 1.0):
        raise ValueError("target_sparsity must lie in [0, 1]")
    data = _read_numeric_csv(csv_path)
    T, p = data.shape
    if window > T:
        raise ValueError("window exceeds series length")
    for c in range(p):
        col = data[:, c]
        valid = np.flatnonzero(~np.isnan(col))
        if valid.size == 0:
            raise ValueError(f"column {c} has no observations")
        if valid.size < T:
            data[:, c] = np.interp(np.arange(T), valid, col[valid])
    # trailing rectangular moving average
    cs = np.cumsum(data, axis=0)
    trend = np.empty_like(data)
    for t in range(T):
        lo = max(0, t - window + 1)
        total = cs[t] - (cs[lo - 1] if lo > 0 else 0.0)
        trend[t] = total / (t - lo + 1)
    detrended = data - trend

    sc = sample_covariance(detrended)
    try:
        dense_prec = np.linalg.inv(sc.matrix)
        np.linalg.cholesky(sc.matrix)
    except np.linalg.LinAlgError:
        raise ValueError("covariance singular; series carries too little variation") from None

    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    n_zero = math.ceil(target_sparsity * len(pairs))
    order = sorted(pairs, key=lambda ij: (abs(dense_prec[ij[0], ij[1]]), ij[0], ij[1]))
    dropped = set(order[:n_zero])
    edges = [ij for ij in pairs if ij not in dropped]
    graph = Graph(p, edges)
    report = solve_constrained_mle(sc.matrix, tilde_edge_set(graph), SolverConfig())
    return GgmModel(graph, report.solution)


def _read_numeric_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, rec in enumerate(reader):
            if not rec or all(not c.strip() for c in rec):
                continue
            vals = []
            numeric = True
            for c in rec:
                c = c.strip()
                if c == "" or c.lower() in ("nan", "na"):
                    vals.append(np.nan)
                    continue
                try:
                    vals.append(float(c))
                except ValueError:
                    numeric = False
                    break
            if not numeric:
                if i == 0:
                    continue  # tolerate a header line
                raise ValueError(f"{path}: non-numeric value on line {i + 1}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)
