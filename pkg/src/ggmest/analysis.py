"""Fisher information, asymptotic error predictions, and diagnostics.

The asymptotic mean squared error of the relaxed estimators is the sum,
over every node's row parameters, of the matching diagonal entries of the
inverted local Fisher information.  Two Fisher conventions are available:

* ``hessian`` (default): half the trace form ``tr(S E_a S E_b) / 2`` with
  symmetric indicator basis matrices, i.e. the Hessian of the expected
  negative log-likelihood in the canonical parameters.  This is the
  convention whose inverse matches observed estimator covariances (see the
  Monte Carlo oracle) and it is the one used for all predictions.
* ``as_printed``: a historical case-split form kept for reference; it is
  singular at the identity covariance and is not used for predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, decompose_neighborhood, tilde_edge_set
from .models import GgmModel, SparseSymmetricMatrix
from .seeding import substream

FISHER_CONVENTIONS = ("hessian", "as_printed")

INCOHERENCE_MAX_P = 200


@dataclass(frozen=True)
class FisherMatrix:
    """Fisher information over an ordered set of canonical pair parameters."""

    params: tuple
    matrix: np.ndarray
    convention: str
    mc_stderr: np.ndarray | None = None


def _canonical_params(pair_set) -> tuple:
    return tuple(sorted({(min(a, b), max(a, b)) for a, b in pair_set}))


def fisher_matrix(sigma_star_block, relaxed_edges, convention: str = "hessian") -> FisherMatrix:
    """Fisher information of the canonical parameters of a local problem.

    Parameters
    ----------
    sigma_star_block : (d, d) array
        Population covariance restricted to the neighborhood, in local
        indices.
    relaxed_edges : iterable of local index pairs
        Support of the local problem; mirrored pairs collapse to one
        canonical parameter each.
    convention : {"hessian", "as_printed"}
    """
    if convention not in FISHER_CONVENTIONS:
        raise ValueError(f"unknown Fisher convention {convention!r}")
    sigma = np.asarray(sigma_star_block, dtype=float)
    params = _canonical_params(relaxed_edges)
    if not params:
        raise ValueError("relaxed edge set is empty")
    m = np.array([a for a, _ in params])
    n = np.array([b for _, b in params])
    if convention == "hessian":
        S_mm = sigma[m[:, None], m[None, :]]
        S_nn = sigma[n[:, None], n[None, :]]
        S_mn = sigma[m[:, None], n[None, :]]
        S_nm = sigma[n[:, None], m[None, :]]
        w = np.where(m == n, 2.0, 1.0)
        F = (S_mn * S_nm + S_mm * S_nn) / np.outer(w, w)
    else:
        # case-split form over parameter pairs a = (m, n), b = (l, k)
        diag = m == n
        both_diag = diag[:, None] & diag[None, :]
        one_diag = diag[:, None] ^ diag[None, :]
        S_ml = sigma[m[:, None], m[None, :]]
        S_mk = sigma[m[:, None], n[None, :]]
        S_nl = sigma[n[:, None], m[None, :]]
        F = np.where(both_diag, 2.0 * S_ml**2, np.where(one_diag, 2.0, 1.0) * S_mk * S_nl)
    return FisherMatrix(params=params, matrix=F, convention=convention)


def fisher_mc_oracle(sigma_block, relaxed_edges, n_samples: int = 100_000, seed: int = 0) -> FisherMatrix:
    """Monte Carlo estimate of the Fisher information: the empirical
    covariance of the per-sample score at the true parameters.

    Returns a FisherMatrix with ``mc_stderr`` filled with the standard
    error of every entry, so agreement checks can be stated in standard
    errors.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    sigma = np.asarray(sigma_block, dtype=float)
    params = _canonical_params(relaxed_edges)
    L = np.linalg.cholesky(sigma)
    rng = substream(seed, "fisher-mc")
    X = rng.standard_normal((int(n_samples), sigma.shape[0])) @ L.T
    scores = np.empty((X.shape[0], len(params)))
    for a, (mi, ni) in enumerate(params):
        if mi == ni:
            scores[:, a] = 0.5 * (sigma[mi, mi] - X[:, mi] ** 2)
        else:
            scores[:, a] = sigma[mi, ni] - X[:, mi] * X[:, ni]
    n = X.shape[0]
    F = scores.T @ scores / n
    q = len(params)
    stderr = np.empty((q, q))
    for a in range(q):
        for b in range(a, q):
            prod = scores[:, a] * scores[:, b]
            se = float(np.std(prod, ddof=1) / math.sqrt(n))
            stderr[a, b] = se
            stderr[b, a] = se
    return FisherMatrix(params=params, matrix=F, convention="mc", mc_stderr=stderr)


def _local_variances(sigma_block: np.ndarray, pair_set) -> dict:
    """Map each canonical local parameter to its asymptotic variance, the
    matching diagonal entry of the inverted Fisher information."""
    fm = fisher_matrix(sigma_block, pair_set, "hessian")
    try:
        inv_diag = np.diag(np.linalg.inv(fm.matrix))
    except np.linalg.LinAlgError:
        raise ValueError("Fisher information is singular for this neighborhood") from None
    return dict(zip(fm.params, inv_diag))


def asymptotic_mse(model: GgmModel, hops=None) -> float:
    """Asymptotic limit of ``T * E || estimate - truth ||_F^2``.

    ``hops=None`` (or infinity) gives the limit for the global constrained
    MLE; an integer gives it for the k-hop relaxed estimator before
    symmetrization.  Summation runs over every node's row parameters, so
    both orientations of an edge are counted, matching the squared
    Frobenius norm.
    """
    sigma = model.covariance
    graph = model.graph
    if hops is None or (isinstance(hops, float) and math.isinf(hops)):
        variances = _local_variances(sigma, tilde_edge_set(graph))
        total = 0.0
        for (a, b), v in variances.items():
            total += v if a == b else 2.0 * v
        return float(total)
    hops = int(hops)
    if hops < 1:
        raise ValueError("hops must be >= 1 (or None for the global estimator)")

    cache: dict = {}
    total = 0.0
    for i in range(graph.p):
        dec = decompose_neighborhood(graph, i, hops)
        if hops == 1:
            d = dec.size
            local_pairs = frozenset((a, b) for a in range(d) for b in range(d))
        else:
            local_pairs = frozenset(dec.relaxed_local)
        key = (dec.nodes, local_pairs)
        if key not in cache:
            idx = np.array(dec.nodes, dtype=int)
            cache[key] = _local_variances(sigma[np.ix_(idx, idx)], local_pairs)
        variances = cache[key]
        li = dec.local_index
        for a, b in dec.row_params:
            la, lb = li[a], li[b]
            total += variances[(min(la, lb), max(la, lb))]
    return float(total)


def check_monotonicity(model: GgmModel, k_max: int, slack: float = 1e-9) -> list[float]:
    """Asymptotic MSE for hop counts 1..k_max followed by the global value.

    Raises ``ValueError`` if the sequence increases anywhere by more than
    ``slack``; larger neighborhoods can only help.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    seq = [asymptotic_mse(model, k) for k in range(1, k_max + 1)]
    seq.append(asymptotic_mse(model, None))
    for a, b in zip(seq, seq[1:]):
        if b > a + slack:
            raise ValueError(f"asymptotic MSE increased along the hop sequence: {a} -> {b}")
    return seq


def normalized_mse(estimate, truth) -> float:
    """Squared Frobenius error of ``estimate`` relative to ``truth``."""
    if isinstance(estimate, SparseSymmetricMatrix):
        estimate = estimate.to_dense()
    if isinstance(truth, SparseSymmetricMatrix):
        truth = truth.to_dense()
    est = np.asarray(estimate, dtype=float)
    tr = np.asarray(truth, dtype=float)
    if est.shape != tr.shape:
        raise ValueError("estimate and truth must have the same shape")
    denom = float(np.sum(tr**2))
    if denom == 0.0:
        raise ValueError("truth matrix is zero; normalized error is undefined")
    return float(np.sum((est - tr) ** 2) / denom)


@dataclass(frozen=True)
class BoundInputs:
    """Ingredients of the high-dimensional error bound.

    ``kappa_bar`` is the largest eigenvalue of the true precision,
    ``sigma_bar`` the largest true variance, ``R_bar`` the largest local
    relaxed support size (ordered pairs), ``r`` the total over all nodes,
    and ``C`` the free confidence constant.
    """

    kappa_bar: float
    sigma_bar: float
    R_bar: int
    r: int
    C: float = 2.0

    def __post_init__(self):
        if self.kappa_bar <= 0 or self.sigma_bar <= 0:
            raise ValueError("kappa_bar and sigma_bar must be positive")
        if not (self.r >= self.R_bar >= 1):
            raise ValueError("sizes must satisfy r >= R_bar >= 1")
        if self.C <= 0:
            raise ValueError("C must be positive")


@dataclass(frozen=True)
class BoundReport:
    bound: float
    min_sample_size: float
    probability: float
    sample_size_ok: bool
    probability_vacuous: bool


def hd_error_bound(inputs: BoundInputs, p: int, T: int) -> BoundReport:
    """Finite-sample Frobenius error bound with its validity conditions.

    The bound scales as ``sqrt(r log p / T)``; it holds with probability
    ``1 - 4 / p^(2 (C^2 - 1))`` once ``T`` reaches ``C^2 c1 log p``.  For
    ``C = 1`` the probability expression is vacuous (non-positive) and is
    flagged as such rather than clipped.
    """
    if p < 2:
        raise ValueError("p must be at least 2 for the bound to be meaningful")
    if T < 1:
        raise ValueError("T must be positive")
    logp = math.log(p)
    bound = 720.0 * inputs.C * inputs.kappa_bar**2 * inputs.sigma_bar * math.sqrt(
        inputs.r * logp / T
    )
    eps_cap = min(1.0 / (9.0 * inputs.kappa_bar * math.sqrt(inputs.R_bar)), 40.0 * inputs.sigma_bar)
    c1 = 6400.0 * inputs.sigma_bar**2 / eps_cap**2
    min_T = inputs.C**2 * c1 * logp
    probability = 1.0 - 4.0 / p ** (2.0 * (inputs.C**2 - 1.0))
    return BoundReport(
        bound=float(bound),
        min_sample_size=float(min_T),
        probability=float(probability),
        sample_size_ok=bool(T >= min_T),
        probability_vacuous=bool(probability <= 0.0),
    )


def bound_inputs_from_model(model: GgmModel, hops: int, C: float = 2.0) -> BoundInputs:
    """Compute the bound ingredients for a model and hop count, using the
    same relaxed supports as the estimator (full local pair set at one
    hop)."""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    J = model.precision.to_dense()
    kappa_bar = float(np.linalg.eigvalsh(J)[-1])
    sigma_bar = float(np.max(np.diag(model.covariance)))
    sizes = []
    for i in range(model.p):
        dec = decompose_neighborhood(model.graph, i, hops)
        sizes.append(dec.size**2 if hops == 1 else len(dec.relaxed_edges))
    return BoundInputs(
        kappa_bar=kappa_bar,
        sigma_bar=sigma_bar,
        R_bar=int(max(sizes)),
        r=int(sum(sizes)),
        C=C,
    )


def incoherence(sigma, graph: Graph) -> float:
    """Irrepresentability diagnostic of the support versus its complement.

    Builds the two needed blocks of the Kronecker square of ``sigma``
    restricted to the support pair set and its complement, and returns the
    max-row-sum norm of the solved block system.  Guarded to small
    dimensions because the complement block is dense.
    """
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    if p > INCOHERENCE_MAX_P:
        raise ValueError(f"incoherence is limited to p <= {INCOHERENCE_MAX_P}")
    if graph.p != p:
        raise ValueError("graph size does not match sigma")
    support = sorted(tilde_edge_set(graph))
    sup_set = set(support)
    complement = [
        (i, j) for i in range(p) for j in range(p) if (i, j) not in sup_set
    ]
    if not complement:
        return 0.0
    ri = np.array([a for a, _ in support])
    rj = np.array([b for _, b in support])
    ci = np.array([a for a, _ in complement])
    cj = np.array([b for _, b in complement])
    # (sigma kron sigma)[(i,j),(k,l)] = sigma[i,k] * sigma[j,l]
    A = sigma[ri[:, None], ri[None, :]] * sigma[rj[:, None], rj[None, :]]
    B = sigma[ri[:, None], ci[None, :]] * sigma[rj[:, None], cj[None, :]]
    X = np.linalg.solve(A, B)
    return float(np.max(np.sum(np.abs(X), axis=1)))
