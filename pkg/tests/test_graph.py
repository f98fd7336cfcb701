"""Graph machinery: support sets, k-hop neighborhoods, local decompositions."""

import numpy as np
import pytest

from ggmest import (
    Graph,
    decompose_neighborhood,
    khop_nodes,
    read_edge_list,
    tilde_edge_set,
    write_edge_list,
)
from ggmest.models import knn_model

from conftest import chain_graph, cycle_graph


class TestGraph:
    def test_canonical_storage(self):
        g = Graph(4, [(2, 1), (0, 3)])
        assert g.edges == frozenset({(1, 2), (0, 3)})
        assert g.n_edges == 2

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(3, [(1, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 3)])

    def test_neighbors_sorted(self):
        g = Graph(5, [(0, 4), (0, 2), (0, 1)])
        assert g.neighbors(0) == (1, 2, 4)
        assert g.degree(0) == 3
        assert g.neighbors(3) == ()


class TestTildeEdgeSet:
    def test_single_edge(self):
        g = Graph(2, [(0, 1)])
        assert tilde_edge_set(g) == frozenset({(0, 0), (1, 1), (0, 1), (1, 0)})

    def test_edgeless(self):
        g = Graph(3, [])
        assert tilde_edge_set(g) == frozenset({(0, 0), (1, 1), (2, 2)})

    def test_complete(self):
        g = Graph(3, [(0, 1), (0, 2), (1, 2)])
        assert tilde_edge_set(g) == frozenset(
            (i, j) for i in range(3) for j in range(3)
        )


class TestKhopNodes:
    def test_chain_one_hop(self):
        assert khop_nodes(chain_graph(5), 2, 1) == (1, 2, 3)

    def test_chain_two_hop(self):
        assert khop_nodes(chain_graph(5), 2, 2) == (0, 1, 2, 3, 4)

    def test_zero_hops(self):
        assert khop_nodes(chain_graph(5), 2, 0) == (2,)
        assert khop_nodes(cycle_graph(6), 4, 0) == (4,)


def _brute_force_buffer(graph, nodes):
    inside = set(nodes)
    out = set()
    for j in nodes:
        if any(nb not in inside for nb in graph.neighbors(j)):
            out.add(j)
    return out


class TestDecomposeNeighborhood:
    def test_chain_center_one_hop(self):
        d = decompose_neighborhood(chain_graph(5), 2, 1)
        assert d.nodes == (1, 2, 3)
        assert set(d.buffer) == {1, 3}
        assert set(d.protected) == {2}
        # buffer-buffer fill-in makes the relaxation the full local pair set
        full = {(a, b) for a in range(3) for b in range(3)}
        assert set(d.relaxed_local) == full

    def test_chain_center_two_hop(self):
        d = decompose_neighborhood(chain_graph(5), 2, 2)
        assert d.nodes == (0, 1, 2, 3, 4)
        assert set(d.buffer) == set()
        assert set(d.protected) == {0, 1, 2, 3, 4}
        assert set(d.relaxed_edges) == set(tilde_edge_set(chain_graph(5)))

    def test_four_cycle_one_hop(self):
        d = decompose_neighborhood(cycle_graph(4), 0, 1)
        assert d.nodes == (0, 1, 3)
        assert set(d.buffer) == {1, 3}
        assert set(d.protected) == {0}
        full = {(a, b) for a in range(3) for b in range(3)}
        assert set(d.relaxed_local) == full

    def test_buffer_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = int(rng.integers(5, 25))
            model = knn_model(p, int(rng.integers(1, 4)), seed=int(rng.integers(1000)))
            g = model.graph
            center = int(rng.integers(p))
            k = int(rng.integers(1, 4))
            d = decompose_neighborhood(g, center, k)
            assert set(d.buffer) == _brute_force_buffer(g, d.nodes)
            assert set(d.buffer) | set(d.protected) == set(d.nodes)
            assert set(d.buffer) & set(d.protected) == set()

    def test_interior_nodes_are_protected(self):
        # every node strictly closer than k to the center has all its
        # neighbors inside the neighborhood, hence must be protected
        rng = np.random.default_rng(3)
        for _ in range(10):
            p = int(rng.integers(6, 20))
            g = knn_model(p, 2, seed=int(rng.integers(1000))).graph
            center = int(rng.integers(p))
            k = int(rng.integers(2, 4))
            d = decompose_neighborhood(g, center, k)
            interior = set(khop_nodes(g, center, k - 1))
            strictly_inside = {
                j for j in interior
                if all(nb in set(d.nodes) for nb in g.neighbors(j))
            }
            assert interior <= set(d.nodes)
            for j in strictly_inside:
                assert j in set(d.protected)

    def test_row_params_protected_and_relaxed(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            p = int(rng.integers(4, 18))
            g = knn_model(p, 2, seed=int(rng.integers(1000))).graph
            center = int(rng.integers(p))
            k = int(rng.integers(1, 4))
            d = decompose_neighborhood(g, center, k)
            assert set(d.row_params) <= set(d.protected_edges)
            assert set(d.row_params) <= set(d.relaxed_edges)
            assert set(d.protected_edges) <= set(d.relaxed_edges)

    def test_relaxed_edges_symmetric_with_diagonal(self):
        g = knn_model(12, 3, seed=5).graph
        for center in range(12):
            d = decompose_neighborhood(g, center, 2)
            rel = set(d.relaxed_edges)
            assert {(b, a) for (a, b) in rel} == rel
            for j in d.nodes:
                assert (j, j) in rel

    def test_deterministic(self):
        g = knn_model(15, 3, seed=9).graph
        a = decompose_neighborhood(g, 4, 2)
        b = decompose_neighborhood(g, 4, 2)
        assert a == b
        assert a.nodes == b.nodes
        assert a.relaxed_edges == b.relaxed_edges

    def test_row_params_cover_support_once(self):
        # union over centers of the row-parameter sets is a partition of the
        # augmented support by rows
        g = knn_model(10, 2, seed=1).graph
        seen = set()
        for i in range(10):
            d = decompose_neighborhood(g, i, 1)
            rows = set(d.row_params)
            for (a, b) in rows:
                assert a == i
                assert (a, b) not in seen
            seen |= rows
        assert seen == set(tilde_edge_set(g))

    def test_local_index_bijection(self):
        g = knn_model(10, 2, seed=2).graph
        d = decompose_neighborhood(g, 3, 2)
        assert sorted(d.local_index) == list(d.nodes)
        locs = sorted(d.local_index[j] for j in d.nodes)
        assert locs == list(range(d.size))

    def test_invalid_hops(self):
        with pytest.raises(ValueError):
            decompose_neighborhood(chain_graph(4), 0, 0)


class TestEdgeListIo:
    def test_round_trip(self, tmp_path):
        g = knn_model(14, 3, seed=4).graph
        path = tmp_path / "edges.txt"
        write_edge_list(g, path)
        back = read_edge_list(path)
        assert back == g

    def test_format(self, tmp_path):
        g = Graph(3, [(0, 2), (0, 1)])
        path = tmp_path / "edges.txt"
        write_edge_list(g, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "3 2"
        assert lines[1:] == ["0 1", "0 2"]
