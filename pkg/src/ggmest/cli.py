"""Command line interface.

Subcommands: generate (build a model and write its files), estimate (one
estimate from a model plus samples), experiment (config-driven grid run),
analyze (asymptotic predictions and diagnostics for a model), ingest (fit
a model to a raw time series).

Exit codes: 0 success, 1 configuration/usage errors, 2 numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    INCOHERENCE_MAX_P,
    bound_inputs_from_model,
    check_monotonicity,
    hd_error_bound,
    incoherence,
)
from .estimators import gml_estimate, rmml_estimate, symmetrize
from .harness import (
    ANALYSIS_SCHEMA,
    ExperimentConfig,
    _estimator_hops,
    ingest_timeseries,
    run_experiment,
)
from .models import (
    knn_model,
    lattice_model,
    read_model,
    sample_covariance,
    sample_gaussian,
    small_world_model,
    write_model,
)
from .solver import SolverConfig, SolverError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors (exit code 1, not argparse's 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ggmest", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a model and write its files")
    g.add_argument("--family", required=True, choices=["knn", "lattice", "small_world"])
    g.add_argument("--p", type=int)
    g.add_argument("--K", type=int)
    g.add_argument("--decay", type=float, default=0.5)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--mean", type=float, default=0.5)
    g.add_argument("--variance", type=float, default=0.2)
    g.add_argument("--beta", type=float)
    g.add_argument("--weight-low", type=float, default=0.2)
    g.add_argument("--weight-high", type=float, default=0.8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output file prefix")

    e = sub.add_parser("estimate", help="run one estimator on samples of a model")
    e.add_argument("--model", required=True, help="model file prefix")
    e.add_argument("--samples", help="CSV of samples (T rows, p columns)")
    e.add_argument("--T", type=int, help="draw this many samples instead")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--estimator", required=True)
    e.add_argument("--algorithm", default="block_regression",
                   choices=["block_regression", "projected_gradient"])
    e.add_argument("--tol", type=float, default=1e-7)
    e.add_argument("--ridge", type=float, default=0.0)
    e.add_argument("--out", required=True, help="output triplet file for the estimate")

    x = sub.add_parser("experiment", help="run a config-driven experiment grid")
    x.add_argument("config", help="JSON experiment config")

    a = sub.add_parser("analyze", help="asymptotic predictions and diagnostics")
    a.add_argument("--model", required=True, help="model file prefix")
    a.add_argument("--max-hops", type=int, default=2)
    a.add_argument("--bound-T", type=int)
    a.add_argument("--bound-C", type=float, default=2.0)
    a.add_argument("--out", required=True, help="output CSV")

    i = sub.add_parser("ingest", help="fit a model to a raw time series CSV")
    i.add_argument("--csv", required=True)
    i.add_argument("--window", type=int, required=True)
    i.add_argument("--target-sparsity", type=float, required=True)
    i.add_argument("--out", required=True, help="model file prefix")
    return parser


def _cmd_generate(args) -> int:
    if args.family == "knn":
        if args.p is None or args.K is None:
            raise ValueError("knn requires --p and --K")
        model = knn_model(args.p, args.K, args.decay, args.seed)
    elif args.family == "lattice":
        if args.rows is None or args.cols is None:
            raise ValueError("lattice requires --rows and --cols")
        model = lattice_model(args.rows, args.cols, args.mean, args.variance, args.seed)
    else:
        if args.p is None or args.K is None or args.beta is None:
            raise ValueError("small_world requires --p, --K and --beta")
        model = small_world_model(
            args.p, args.K, args.beta, args.weight_low, args.weight_high, args.seed
        )
    write_model(model, args.out)
    print(f"wrote {args.out}.graph.txt and {args.out}.precision.txt "
          f"(p={model.p}, edges={model.graph.n_edges})")
    return 0


def _cmd_estimate(args) -> int:
    model = read_model(args.model)
    if (args.samples is None) == (args.T is None):
        raise ValueError("provide exactly one of --samples or --T")
    if args.samples:
        X = np.loadtxt(args.samples, delimiter=",", ndmin=2)
    else:
        X = sample_gaussian(model, args.T, args.seed)
    sc = sample_covariance(X)
    cfg = SolverConfig(algorithm=args.algorithm, tol_residual=args.tol, ridge=args.ridge)
    hops = _estimator_hops(args.estimator)
    if args.estimator == "gml":
        rep = gml_estimate(sc, model.graph, cfg)
        presym = 0.0
    else:
        rep = rmml_estimate(sc, model.graph, hops, cfg)
        presym = rep.max_asymmetry
        if args.estimator != "loc":
            rep = symmetrize(rep, model.graph)
    truth = model.precision.to_dense()
    err = rep.matrix - truth
    _write_triplets(rep.matrix, args.out)
    print(f"estimator={args.estimator} T={sc.sample_count} "
          f"normalized_mse={float(np.sum(err**2) / np.sum(truth**2)):.6g} "
          f"frobenius_error={float(np.sqrt(np.sum(err**2))):.6g} "
          f"max_asymmetry={presym:.6g} residual={rep.max_residual:.3g}")
    return 0


def _write_triplets(matrix: np.ndarray, path) -> None:
    p = matrix.shape[0]
    lines = []
    for i in range(p):
        for j in range(p):
            if matrix[i, j] != 0.0:
                lines.append(f"{i} {j} {matrix[i, j]:.17g}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if not config.output_path:
        raise ValueError("config must set output_path")
    rows = run_experiment(config)
    n_err = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {config.output_path} ({n_err} error rows)")
    return 0


def _cmd_analyze(args) -> int:
    model = read_model(args.model)
    if args.max_hops < 1:
        raise ValueError("--max-hops must be >= 1")
    seq = check_monotonicity(model, args.max_hops)
    records = []
    for k, v in enumerate(seq[:-1], start=1):
        records.append(("asymptotic_tmse", f"rmml_k{k}", k, v))
    records.append(("asymptotic_tmse", "gml", "", seq[-1]))
    if model.p <= INCOHERENCE_MAX_P:
        records.append(("incoherence", "", "", incoherence(model.covariance, model.graph)))
    if args.bound_T is not None:
        inputs = bound_inputs_from_model(model, min(args.max_hops, 2), args.bound_C)
        rep = hd_error_bound(inputs, model.p, args.bound_T)
        records.append(("hd_bound", "", "", rep.bound))
        records.append(("hd_min_T", "", "", rep.min_sample_size))
        records.append(("hd_probability", "", "", rep.probability))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        fh.write(f"# {ANALYSIS_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["model_id", "quantity", "estimator", "k", "value"])
        for quantity, estimator, k, value in records:
            w.writerow([0, quantity, estimator, k, f"{value:.12g}"])
    print(f"wrote {len(records)} analysis rows to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    model = ingest_timeseries(args.csv, args.window, args.target_sparsity)
    write_model(model, args.out)
    print(f"wrote {args.out}.graph.txt and {args.out}.precision.txt "
          f"(p={model.p}, edges={model.graph.n_edges})")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "estimate": _cmd_estimate,
    "experiment": _cmd_experiment,
    "analyze": _cmd_analyze,
    "ingest": _cmd_ingest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
