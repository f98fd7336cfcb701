"""Gaussian graphical model estimation on a known support.

Global and neighborhood-local maximum likelihood estimators for the
precision matrix of a zero-mean Gaussian whose conditional independence
graph is given, plus asymptotic accuracy predictions, finite-sample error
bounds, synthetic model generators and an experiment harness.
"""

from .analysis import (
    BoundInputs,
    BoundReport,
    FisherMatrix,
    asymptotic_mse,
    bound_inputs_from_model,
    check_monotonicity,
    fisher_matrix,
    fisher_mc_oracle,
    hd_error_bound,
    incoherence,
    normalized_mse,
)
from .estimators import EstimateReport, gml_estimate, rmml_estimate, symmetrize
from .graph import (
    Graph,
    NeighborhoodDecomposition,
    decompose_neighborhood,
    khop_nodes,
    read_edge_list,
    tilde_edge_set,
    write_edge_list,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    ingest_timeseries,
    read_results,
    run_experiment,
    write_results,
)
from .models import (
    GgmModel,
    SampleCovariance,
    SparseSymmetricMatrix,
    ensure_pd,
    knn_model,
    lattice_model,
    nearest_neighbor_edges,
    perturb_nonedges,
    read_model,
    sample_covariance,
    sample_gaussian,
    small_world_model,
    write_model,
)
from .seeding import substream
from .solver import (
    DegenerateSupportError,
    NonconvergenceError,
    NotPositiveDefiniteError,
    SingularLocalCovarianceError,
    SolveReport,
    SolverConfig,
    SolverError,
    one_hop_closed_form,
    projected_gradient_oracle,
    solve_constrained_mle,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "BoundReport",
    "DegenerateSupportError",
    "EstimateReport",
    "ExperimentConfig",
    "FisherMatrix",
    "GgmModel",
    "Graph",
    "NeighborhoodDecomposition",
    "NonconvergenceError",
    "NotPositiveDefiniteError",
    "ResultRow",
    "SampleCovariance",
    "SingularLocalCovarianceError",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "SparseSymmetricMatrix",
    "asymptotic_mse",
    "bound_inputs_from_model",
    "check_monotonicity",
    "decompose_neighborhood",
    "ensure_pd",
    "fisher_matrix",
    "fisher_mc_oracle",
    "gml_estimate",
    "hd_error_bound",
    "incoherence",
    "ingest_timeseries",
    "khop_nodes",
    "knn_model",
    "lattice_model",
    "nearest_neighbor_edges",
    "normalized_mse",
    "one_hop_closed_form",
    "perturb_nonedges",
    "projected_gradient_oracle",
    "read_edge_list",
    "read_model",
    "read_results",
    "rmml_estimate",
    "run_experiment",
    "sample_covariance",
    "sample_gaussian",
    "small_world_model",
    "solve_constrained_mle",
    "substream",
    "symmetrize",
    "tilde_edge_set",
    "write_edge_list",
    "write_model",
    "write_results",
]
