"""Synthetic Gaussian graphical models, sampling, and sample covariances.

Model generators build a graph, assign edge weights to the precision
matrix, and repair positive definiteness by diagonal loading.  All
randomness is drawn from purpose-tagged substreams of a single seed, so a
model is a pure function of its parameters and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, read_edge_list, tilde_edge_set, write_edge_list
from .seeding import substream

DEFAULT_PD_FLOOR = 0.1

# Relative tolerance for the cached covariance: precision times covariance
# must reproduce the identity to this accuracy.
_INVERSE_IDENTITY_RTOL = 1e-10


class SparseSymmetricMatrix:
    """Symmetric matrix with an explicit support of canonical index pairs.

    Entries off the support are exactly zero, and reads of them return
    exactly zero.  Values are stored per canonical pair ``(m, n)`` with
    ``m <= n``; the mirror entry is implied.
    """

    __slots__ = ("dim", "support", "_dense")

    def __init__(self, dim: int, values: dict) -> None:
        if dim < 1:
            raise ValueError("dimension must be positive")
        dense = np.zeros((dim, dim))
        support = set()
        for (m, n), v in values.items():
            if not (0 <= m <= n < dim):
                raise ValueError(f"pair ({m}, {n}) is not canonical for dim={dim}")
            if (m, n) in support:
                raise ValueError(f"duplicate pair ({m}, {n})")
            support.add((m, n))
            dense[m, n] = v
            dense[n, m] = v
        self.dim = dim
        self.support = frozenset(support)
        self._dense = dense

    @classmethod
    def from_dense(cls, dense: np.ndarray, support) -> "SparseSymmetricMatrix":
        """Extract the canonical support entries of an exactly symmetric
        dense matrix."""
        dense = np.asarray(dense, dtype=float)
        values = {}
        for m, n in support:
            a, b = (m, n) if m <= n else (n, m)
            if dense[a, b] != dense[b, a]:
                raise ValueError(f"dense matrix is not symmetric at ({a}, {b})")
            values[(a, b)] = dense[a, b]
        return cls(dense.shape[0], values)

    def value(self, i: int, j: int) -> float:
        a, b = (i, j) if i <= j else (j, i)
        if (a, b) not in self.support:
            return 0.0
        return float(self._dense[a, b])

    def to_dense(self) -> np.ndarray:
        return self._dense.copy()

    def values(self) -> dict:
        return {(m, n): float(self._dense[m, n]) for m, n in sorted(self.support)}

    def __repr__(self) -> str:
        return f"SparseSymmetricMatrix(dim={self.dim}, nnz={len(self.support)})"


class GgmModel:
    """A zero-mean Gaussian graphical model: a graph plus a precision
    matrix supported on the graph's support pair set.

    The covariance is computed lazily on first access and cached; the
    product of precision and covariance is checked against the identity.
    """

    def __init__(self, graph: Graph, precision: SparseSymmetricMatrix) -> None:
        if precision.dim != graph.p:
            raise ValueError("precision dimension does not match graph size")
        allowed = {(i, i) for i in range(graph.p)} | set(graph.edges)
        extra = set(precision.support) - allowed
        if extra:
            raise ValueError(f"precision support exceeds the graph support: {sorted(extra)[:3]}")
        self.graph = graph
        self.precision = precision
        self._covariance: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.graph.p

    @property
    def covariance(self) -> np.ndarray:
        if self._covariance is None:
            J = self.precision.to_dense()
            try:
                np.linalg.cholesky(J)
            except np.linalg.LinAlgError:
                raise ValueError("precision matrix is not positive definite") from None
            sigma = np.linalg.inv(J)
            sigma = (sigma + sigma.T) * 0.5
            err = np.max(np.abs(J @ sigma - np.eye(self.p)))
            scale = max(1.0, np.max(np.abs(J)) * np.max(np.abs(sigma)) * self.p)
            if err > _INVERSE_IDENTITY_RTOL * scale:
                raise ValueError(f"covariance inversion failed the identity check: {err:g}")
            self._covariance = sigma
        return self._covariance

    def __repr__(self) -> str:
        return f"GgmModel(p={self.p}, n_edges={self.graph.n_edges})"


@dataclass(frozen=True)
class SampleCovariance:
    """Second-moment matrix of a sample batch (no mean subtraction)."""

    matrix: np.ndarray
    sample_count: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("covariance must be square")
        if np.max(np.abs(m - m.T), initial=0.0) != 0.0:
            raise ValueError("covariance must be exactly symmetric")
        if self.sample_count < 1:
            raise ValueError("sample count must be positive")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def ensure_pd(matrix: SparseSymmetricMatrix, floor: float = DEFAULT_PD_FLOOR) -> SparseSymmetricMatrix:
    """Diagonal loading: shift the diagonal so the smallest eigenvalue is at
    least ``floor``.  Returns the input unchanged when it already is."""
    if floor <= 0:
        raise ValueError("eigenvalue floor must be positive")
    lam_min = float(np.linalg.eigvalsh(matrix.to_dense())[0])
    if lam_min >= floor:
        return matrix
    missing = [i for i in range(matrix.dim) if (i, i) not in matrix.support]
    if missing:
        raise ValueError("cannot load the diagonal: support lacks diagonal pairs")
    shift = floor - lam_min
    values = matrix.values()
    for i in range(matrix.dim):
        values[(i, i)] += shift
    return SparseSymmetricMatrix(matrix.dim, values)


def nearest_neighbor_edges(points: np.ndarray, K: int) -> frozenset[tuple[int, int]]:
    """Union of directed K-nearest-neighbor picks as undirected canonical
    edges.  Distance ties are broken toward the lower node index."""
    points = np.asarray(points, dtype=float)
    p = points.shape[0]
    if not (1 <= K < p):
        raise ValueError(f"K must satisfy 1 <= K < p, got K={K}, p={p}")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    edges = set()
    for i in range(p):
        # stable sort keeps ascending index order among equal distances
        order = np.argsort(dist[i], kind="stable")[:K]
        for j in order:
            edges.add((min(i, int(j)), max(i, int(j))))
    return frozenset(edges)


def knn_model(p: int, K: int, decay: float = 0.5, seed: int = 0) -> GgmModel:
    """Random geometric K-nearest-neighbor model on the unit square.

    Edge weights are ``s * exp(-decay * d)`` for the point distance ``d``
    and a random sign ``s``; the diagonal is then loaded to make the
    precision positive definite.
    """
    if decay < 0:
        raise ValueError("decay must be nonnegative")
    points = substream(seed, "knn-positions").random((p, 2))
    edges = nearest_neighbor_edges(points, K)
    graph = Graph(p, edges)
    ordered = sorted(edges)
    signs = substream(seed, "knn-signs").integers(0, 2, size=len(ordered)) * 2 - 1
    values = {(i, i): 0.0 for i in range(p)}
    for (i, j), s in zip(ordered, signs):
        d = float(np.hypot(*(points[i] - points[j])))
        values[(i, j)] = float(s) * np.exp(-decay * d)
    precision = ensure_pd(SparseSymmetricMatrix(p, values))
    return GgmModel(graph, precision)


def lattice_model(rows: int, cols: int, mean: float = 0.5, variance: float = 0.2, seed: int = 0) -> GgmModel:
    """Two-dimensional 4-neighbor lattice with Gaussian edge weights
    truncated at 1."""
    if rows < 1 or cols < 1:
        raise ValueError("lattice dimensions must be positive")
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    p = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    graph = Graph(p, edges)
    ordered = sorted(graph.edges)
    w = substream(seed, "lattice-weights").normal(mean, np.sqrt(variance), size=len(ordered))
    values = {(i, i): 0.0 for i in range(p)}
    for (i, j), wij in zip(ordered, w):
        values[(i, j)] = min(float(wij), 1.0)
    precision = ensure_pd(SparseSymmetricMatrix(p, values))
    return GgmModel(graph, precision)


def small_world_model(
    p: int,
    K: int,
    beta: float,
    weight_low: float = 0.2,
    weight_high: float = 0.8,
    seed: int = 0,
) -> GgmModel:
    """Watts-Strogatz small-world model: ring lattice with K/2 neighbors
    per side, each edge rewired with probability ``beta`` to a uniformly
    random new endpoint avoiding self-loops and duplicates.  Edge weights
    are uniform on ``[weight_low, weight_high]``."""
    if K % 2 != 0 or not (0 < K < p):
        raise ValueError("small-world degree K must be even with 0 < K < p")
    if not (0.0 <= beta <= 1.0):
        raise ValueError("rewiring probability must lie in [0, 1]")
    if weight_low > weight_high:
        raise ValueError("weight_low must not exceed weight_high")
    edge_set = set()
    for m in range(1, K // 2 + 1):
        for i in range(p):
            j = (i + m) % p
            edge_set.add((min(i, j), max(i, j)))
    rng = substream(seed, "ws-rewire")
    for m in range(1, K // 2 + 1):
        for i in range(p):
            j = (i + m) % p
            old = (min(i, j), max(i, j))
            if old not in edge_set or rng.random() >= beta:
                continue
            # resample until we find a fresh endpoint; bounded attempts so a
            # nearly complete neighborhood cannot hang the generator
            for _ in range(4 * p):
                t = int(rng.integers(p))
                cand = (min(i, t), max(i, t))
                if t != i and cand not in edge_set:
                    edge_set.remove(old)
                    edge_set.add(cand)
                    break
    graph = Graph(p, edge_set)
    ordered = sorted(graph.edges)
    w = substream(seed, "ws-weights").uniform(weight_low, weight_high, size=len(ordered))
    values = {(i, i): 0.0 for i in range(p)}
    for (i, j), wij in zip(ordered, w):
        values[(i, j)] = float(wij)
    precision = ensure_pd(SparseSymmetricMatrix(p, values))
    return GgmModel(graph, precision)


def perturb_nonedges(model: GgmModel, magnitude: float, seed: int = 0) -> GgmModel:
    """Model misspecification: add ``+/-magnitude`` (equiprobable signs) to
    every strictly off-diagonal non-support entry of the precision matrix,
    then repair positive definiteness by diagonal loading.

    Edge entries and the pre-repair diagonal are left untouched.  The
    returned model carries the enlarged support; errors are always
    measured against the nominal model by the caller.
    """
    if magnitude < 0:
        raise ValueError("perturbation magnitude must be nonnegative")
    p = model.p
    if magnitude == 0:
        return model
    edge_set = model.graph.edges
    nonedges = [
        (i, j) for i in range(p) for j in range(i + 1, p) if (i, j) not in edge_set
    ]
    signs = substream(seed, "perturb-signs").integers(0, 2, size=len(nonedges)) * 2 - 1
    values = model.precision.values()
    for (i, j), s in zip(nonedges, signs):
        values[(i, j)] = float(s) * magnitude
    graph = Graph(p, set(edge_set) | set(nonedges))
    precision = ensure_pd(SparseSymmetricMatrix(p, values))
    return GgmModel(graph, precision)


def sample_gaussian(model: GgmModel, T: int, seed=0) -> np.ndarray:
    """Draw ``T`` zero-mean samples, returned as a ``(T, p)`` array.

    ``seed`` may be an integer or a ready-made numpy Generator (the
    harness passes per-cell substreams directly).
    """
    if T < 1:
        raise ValueError("sample count must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else substream(int(seed), "gaussian-samples")
    sigma = model.covariance
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(sigma + 1e-10 * np.eye(model.p))
        except np.linalg.LinAlgError:
            raise ValueError("model covariance is not positive definite") from None
    z = rng.standard_normal((T, model.p))
    return z @ L.T


def sample_covariance(samples: np.ndarray) -> SampleCovariance:
    """Second-moment matrix ``X'X / T`` of a ``(T, p)`` sample array.

    The mean is known to be zero, so it is not subtracted.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("samples must be a nonempty (T, p) array")
    C = X.T @ X / X.shape[0]
    C = (C + C.T) * 0.5
    return SampleCovariance(matrix=C, sample_count=X.shape[0])


def write_model(model: GgmModel, prefix) -> None:
    """Write ``<prefix>.graph.txt`` (edge list) and ``<prefix>.precision.txt``
    (canonical ``i j value`` triplets)."""
    prefix = str(prefix)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_edge_list(model.graph, prefix + ".graph.txt")
    lines = [
        f"{m} {n} {v:.17g}"
        for (m, n), v in sorted(model.precision.values().items())
    ]
    Path(prefix + ".precision.txt").write_text("\n".join(lines) + "\n")


def read_model(prefix) -> GgmModel:
    prefix = str(prefix)
    graph = read_edge_list(prefix + ".graph.txt")
    values = {}
    for line in Path(prefix + ".precision.txt").read_text().strip().splitlines():
        if not line.strip():
            continue
        m, n, v = line.split()
        values[(int(m), int(n))] = float(v)
    return GgmModel(graph, SparseSymmetricMatrix(graph.p, values))
