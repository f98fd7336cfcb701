"""Shared fixtures and small graph builders used across the test modules."""

import numpy as np
import pytest

from ggmest import Graph, GgmModel, SparseSymmetricMatrix, tilde_edge_set


def chain_graph(p):
    return Graph(p, [(i, i + 1) for i in range(p - 1)])


def cycle_graph(p):
    edges = [(i, i + 1) for i in range(p - 1)] + [(0, p - 1)]
    return Graph(p, edges)


def chain_model(p, off=-0.4, diag=1.0):
    """Tridiagonal precision matrix model on a chain; PD for |off| < diag/2."""
    J = np.zeros((p, p))
    np.fill_diagonal(J, diag)
    for i in range(p - 1):
        J[i, i + 1] = J[i + 1, i] = off
    graph = chain_graph(p)
    prec = SparseSymmetricMatrix.from_dense(J, tilde_edge_set(graph))
    return GgmModel(graph, prec)


@pytest.fixture
def chain5():
    return chain_graph(5)


@pytest.fixture
def chain5_model():
    return chain_model(5)
