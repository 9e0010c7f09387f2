import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperssl import build_layer, clique_expand, isolated_nodes
from hyperssl.errors import InvalidNode, InvalidWeight
from hyperssl.hypergraph import Layer, MultilayerHypergraph, hyperedge_degrees
from hyperssl.objective import regularizer

from conftest import random_problem


def dense_clique_adjacency(layer, n):
    """A = K^T W K - D with W = diag(w/|e|), built densely."""
    K = np.zeros((len(layer.hyperedges), n))
    w = np.zeros(len(layer.hyperedges))
    for k, (weight, nodes) in enumerate(layer.hyperedges):
        K[k, list(nodes)] = 1.0
        w[k] = weight / len(nodes)
    M = K.T @ np.diag(w) @ K
    return M - np.diag(np.diag(M))


def clique_dense(cl):
    return cl.adjacency().toarray()


class TestBuildLayer:
    def test_pass_through(self):
        layer = build_layer([(3.0, [0, 1, 2])], 3)
        assert layer.hyperedges == ((3.0, (0, 1, 2)),)
        assert layer.warnings == ()

    def test_sorts_and_dedups(self):
        layer = build_layer([(1.0, [2, 0, 2, 1])], 3)
        assert layer.hyperedges == ((1.0, (0, 1, 2)),)

    def test_singleton_dropped_with_warning(self):
        layer = build_layer([(1.0, [5])], 6)
        assert len(layer) == 0
        assert len(layer.warnings) == 1

    def test_duplicate_collapsing_to_singleton(self):
        layer = build_layer([(1.0, [4, 4])], 6)
        assert len(layer) == 0 and len(layer.warnings) == 1

    @pytest.mark.parametrize("bad", [[0, -1], [0, 4]])
    def test_invalid_node(self, bad):
        with pytest.raises(InvalidNode):
            build_layer([(2.0, [0, 3]), (1.0, bad)], 4)

    @pytest.mark.parametrize("w", [0.0, -1.0, float("nan")])
    def test_invalid_weight(self, w):
        with pytest.raises(InvalidWeight):
            build_layer([(w, [0, 1])], 2)

    def test_empty_hyperedge_rejected(self):
        with pytest.raises(ValueError):
            build_layer([(1.0, [])], 2)

    def test_node_count_must_be_positive(self):
        with pytest.raises(ValueError):
            build_layer([], 0)


class TestCliqueExpand:
    def test_triangle(self):
        cl = clique_expand(build_layer([(3.0, [0, 1, 2])], 3), 3)
        assert cl.edges == [(0, 1), (0, 2), (1, 2)]
        np.testing.assert_allclose(cl.weights, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(cl.degrees, [2.0, 2.0, 2.0])

    def test_single_pair(self):
        cl = clique_expand(build_layer([(2.0, [0, 1])], 2), 2)
        assert cl.edges == [(0, 1)]
        np.testing.assert_allclose(cl.weights, [1.0])
        np.testing.assert_allclose(cl.degrees, [1.0, 1.0])

    def test_shared_pair_aggregates(self):
        cl = clique_expand(build_layer([(3.0, [0, 1, 2]), (2.0, [0, 1])], 3), 3)
        assert cl.edges == [(0, 1), (0, 2), (1, 2)]
        np.testing.assert_allclose(cl.weights, [2.0, 1.0, 1.0])
        np.testing.assert_allclose(cl.degrees, [3.0, 3.0, 2.0])

    def test_matches_dense_incidence_formula(self, rng):
        n = 15
        raw = [(rng.uniform(0.1, 3), rng.choice(n, rng.integers(2, 7), replace=False)) for _ in range(25)]
        layer = build_layer(raw, n)
        cl = clique_expand(layer, n)
        A = dense_clique_adjacency(layer, n)
        np.testing.assert_allclose(clique_dense(cl), A, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(cl.degrees, A.sum(axis=1), rtol=1e-12)

    def test_orientation_source_is_smaller_id(self, rng):
        n = 12
        raw = [(1.0, rng.choice(n, 4, replace=False)) for _ in range(10)]
        cl = clique_expand(build_layer(raw, n), n)
        assert np.all(cl.src < cl.dst)
        pairs = list(zip(cl.src.tolist(), cl.dst.tolist()))
        assert len(pairs) == len(set(pairs))

    def test_incidence_index(self, rng):
        n = 10
        raw = [(1.0, rng.choice(n, 3, replace=False)) for _ in range(8)]
        cl = clique_expand(build_layer(raw, n), n)
        B = cl.incidence.toarray()
        for u in range(n):
            sl = slice(cl.indptr[u], cl.indptr[u + 1])
            for e, s, v in zip(cl.inc_edge[sl], cl.inc_sign[sl], cl.inc_nbr[sl]):
                assert B[e, u] == s
                assert B[e, v] == -s
            assert sorted(cl.inc_edge[sl].tolist()) == sorted(np.flatnonzero(B[:, u]).tolist())

    def test_degree_consistency(self, rng):
        n = 25
        raw = [(rng.uniform(0.1, 5), rng.choice(n, rng.integers(2, 8), replace=False)) for _ in range(40)]
        layer = build_layer(raw, n)
        cl = clique_expand(layer, n)
        np.testing.assert_allclose(cl.degrees, hyperedge_degrees(layer, n), rtol=1e-12)

    def test_graph_specialization(self, rng):
        n = 10
        raw = [(float(w), [u, v]) for (u, v), w in zip([(0, 1), (1, 2), (3, 7), (2, 9)], rng.uniform(0.5, 2, 4))]
        cl = clique_expand(build_layer(raw, n), n)
        expected = {(min(u, v), max(u, v)): w / 2 for w, (u, v) in raw}
        got = dict(zip(cl.edges, cl.weights.tolist()))
        assert got == expected

    def test_aggregation_linearity(self, rng):
        n = 12
        raw1 = [(rng.uniform(0.5, 2), rng.choice(n, 3, replace=False)) for _ in range(6)]
        raw2 = [(rng.uniform(0.5, 2), rng.choice(n, 4, replace=False)) for _ in range(6)]
        both = clique_dense(clique_expand(build_layer(raw1 + raw2, n), n))
        parts = clique_dense(clique_expand(build_layer(raw1, n), n)) + clique_dense(clique_expand(build_layer(raw2, n), n))
        np.testing.assert_allclose(both, parts, rtol=1e-12)


class TestIsolated:
    def test_single_edge(self):
        assert isolated_nodes(clique_expand(build_layer([(1.0, [0, 1])], 4), 4)) == [2, 3]

    def test_triangle(self):
        assert isolated_nodes(clique_expand(build_layer([(1.0, [0, 1, 2])], 3), 3)) == []

    def test_empty_layer(self):
        assert isolated_nodes(clique_expand(build_layer([], 2), 2)) == [0, 1]

    def test_isolated_scale_is_zero(self):
        cl = clique_expand(build_layer([(1.0, [0, 1])], 3), 3)
        assert cl.inv_sqrt_degrees[2] == 0.0


class TestMultilayer:
    def test_needs_a_layer(self):
        with pytest.raises(ValueError):
            MultilayerHypergraph(3, ())

    def test_rejects_out_of_range_layer(self):
        with pytest.raises(InvalidNode):
            MultilayerHypergraph(2, (Layer(((1.0, (0, 5)),)),))


@pytest.mark.parametrize("p", [1.8, 2.0, 2.5])
def test_orientation_independence(rng, p):
    problem = random_problem(rng, n=18, L=2, m=2, p=p)
    Z = rng.normal(size=(problem.n, problem.m))
    base = regularizer(problem, Z)
    for layer in problem.layers:
        flip = rng.random(layer.num_edges) < 0.5
        flipped = layer.reoriented(flip)
        U0 = layer.scaled_incidence @ Z
        U1 = flipped.scaled_incidence @ Z
        np.testing.assert_allclose(np.abs(U0), np.abs(U1), rtol=1e-12, atol=0)
        r0 = np.sum(layer.weights[:, None] * np.abs(U0) ** p)
        r1 = np.sum(flipped.weights[:, None] * np.abs(U1) ** p)
        assert r1 == pytest.approx(r0, rel=1e-12)
    assert base >= 0


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0.01, 10), st.lists(st.integers(0, 9), min_size=2, max_size=6)),
        min_size=0,
        max_size=15,
    )
)
def test_degree_formulas_agree(raw):
    layer = build_layer(raw, 10)
    cl = clique_expand(layer, 10)
    np.testing.assert_allclose(cl.degrees, hyperedge_degrees(layer, 10), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(clique_dense(cl), dense_clique_adjacency(layer, 10), rtol=1e-12, atol=1e-14)
