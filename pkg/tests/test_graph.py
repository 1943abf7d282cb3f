import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ghtm.errors import ParameterError
from ghtm.graph import (
    ClusterPartition,
    DocumentGraph,
    batch_adjacency,
    build_knn_graph,
    cluster_batch,
    cosine_similarity,
    normalize_adjacency,
    partition_graph,
    write_edge_list,
)


def brute_force_knn_edges(X, k):
    """All-pairs oracle: pure-Python cosine, sort by (-similarity, index)."""
    n = len(X)
    edges = set()
    for u in range(n):
        scored = []
        for v in range(n):
            if v == u:
                continue
            a, b = X[u], X[v]
            na = math.sqrt(sum(x * x for x in a))
            nb = math.sqrt(sum(x * x for x in b))
            s = 0.0 if na == 0 or nb == 0 else sum(x * y for x, y in zip(a, b)) / (na * nb)
            scored.append((-s, v))
        for _, v in sorted(scored)[:k]:
            edges.add((min(u, v), max(u, v)))
    return edges


def edge_set(g):
    return {tuple(e) for e in g.edges.tolist()}


class TestCosine:
    def test_parallel(self):
        assert cosine_similarity([2, 0], [1, 0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_diagonal(self):
        assert cosine_similarity([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-8)

    def test_zero_vector(self):
        assert cosine_similarity([0, 0], [1, 2]) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(np.float64, 5, elements=st.floats(-100, 100)),
        arrays(np.float64, 5, elements=st.floats(-100, 100)),
    )
    def test_symmetric_and_self(self, a, b):
        assert cosine_similarity(a, b) == cosine_similarity(b, a)
        assert -1.0 <= cosine_similarity(a, b) <= 1.0
        if np.linalg.norm(a) > 1e-6:
            assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)


class TestKnnGraph:
    def test_two_nodes(self):
        g = build_knn_graph(np.array([[1.0, 0.0], [0.0, 1.0]]), 1)
        assert edge_set(g) == {(0, 1)}

    def test_collinear_ties_pick_lowest_index(self):
        X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        g = build_knn_graph(X, 1)
        # 0 picks 1, 1 picks 0, 2 picks 0
        assert edge_set(g) == {(0, 1), (0, 2)} == brute_force_knn_edges(X, 1)

    def test_hand_example(self):
        X = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0]])
        assert edge_set(build_knn_graph(X, 1)) == {(0, 1), (1, 2)}

    def test_invalid_k(self):
        with pytest.raises(ParameterError):
            build_knn_graph(np.eye(3), 3)
        with pytest.raises(ParameterError):
            build_knn_graph(np.eye(3), 0)

    def test_weights_and_structure(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(25, 6))
        g = build_knn_graph(X, 4)
        assert np.all(g.edges[:, 0] < g.edges[:, 1])
        assert len(edge_set(g)) == len(g.edges)
        for (u, v), w in zip(g.edges.tolist(), g.weights.tolist()):
            assert w == pytest.approx(cosine_similarity(X[u], X[v]), abs=1e-12)
            assert v in g.neighbors[u] and u in g.neighbors[v]
        assert np.all(g.degree() >= 4)
        assert sum(g.degree()) == 2 * len(g.edges)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 51))
            k = int(rng.integers(1, n))
            X = rng.normal(size=(n, int(rng.integers(1, 9))))
            assert edge_set(build_knn_graph(X, k)) == brute_force_knn_edges(X.tolist(), k)

    def test_edge_dump(self, tmp_path):
        g = build_knn_graph(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), 1)
        path = tmp_path / "edges.txt"
        write_edge_list(g, path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(g.edges)
        u, v, w = lines[0].split()
        assert (int(u), int(v)) == tuple(g.edges[0]) and float(w) == g.weights[0]


class TestNormalizedAdjacency:
    def test_isolated_node(self):
        g = DocumentGraph.from_edges(3, {(0, 1): 1.0})
        assert normalize_adjacency(g)[2, 2] == 1.0

    def test_single_edge(self):
        g = DocumentGraph.from_edges(2, {(0, 1): 0.3})
        np.testing.assert_allclose(normalize_adjacency(g).toarray(), [[0.5, 0.5], [0.5, 0.5]])

    def test_matches_dense_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(2, 21))
            g = build_knn_graph(rng.normal(size=(n, 3)), int(rng.integers(1, n)))
            A = np.zeros((n, n))
            for u, v in g.edges.tolist():
                A[u, v] = A[v, u] = 1.0
            At = A + np.eye(n)
            Dm = np.diag(1 / np.sqrt(At.sum(axis=1)))
            got = normalize_adjacency(g).toarray()
            np.testing.assert_allclose(got, Dm @ At @ Dm, atol=1e-12, rtol=0)
            np.testing.assert_array_equal(got, got.T)
            assert np.all(np.diag(got) > 0)
            assert np.all(got[got != 0] <= 1.0)


class TestPartition:
    def test_single_cluster(self):
        p = partition_graph(np.random.default_rng(0).normal(size=(7, 3)), 1)
        assert p.assignment.tolist() == [0] * 7

    def test_singletons(self):
        X = np.random.default_rng(0).normal(size=(9, 3))
        p = partition_graph(X, 9, seed=3)
        assert sorted(p.assignment.tolist()) == list(range(9))

    def test_singletons_with_duplicate_points(self):
        X = np.vstack([np.ones((4, 2)), np.zeros((2, 2))])
        p = partition_graph(X, 6, seed=0)
        assert sorted(p.assignment.tolist()) == list(range(6))

    def test_two_blobs(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(0, 0.1, size=(5, 2)), rng.normal(5, 0.1, size=(5, 2))])
        a = partition_graph(X, 2, seed=7).assignment
        assert len(set(a[:5])) == 1 and len(set(a[5:])) == 1 and a[0] != a[5]

    def test_deterministic_and_nonempty(self):
        X = np.random.default_rng(3).normal(size=(40, 4))
        a = partition_graph(X, 6, seed=11)
        b = partition_graph(X, 6, seed=11)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        assert set(a.assignment.tolist()) == set(range(6))

    def test_bounds(self):
        with pytest.raises(ParameterError):
            partition_graph(np.eye(3), 4)


class TestClusterBatch:
    def test_whole_graph(self):
        X = np.random.default_rng(0).normal(size=(8, 3))
        g = build_knn_graph(X, 2)
        b = cluster_batch(g, ClusterPartition(np.zeros(8, dtype=np.int64), 1), 0)
        assert b.core.tolist() == list(range(8)) and b.halo.size == 0
        assert edge_set(g) == {tuple(e) for e in b.edges.tolist()}

    def test_halo_neighbor(self):
        g = DocumentGraph.from_edges(4, {(0, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0})
        part = ClusterPartition(np.array([0, 0, 1, 1]), 2)
        b = cluster_batch(g, part, 0)
        assert b.core.tolist() == [0, 1]
        assert b.halo.tolist() == [2, 3]
        # halo-halo edge (2, 3) is not part of the batch
        assert {tuple(e) for e in b.edges.tolist()} == {(0, 2), (1, 3)}

    def test_isolated_cluster(self):
        g = DocumentGraph.from_edges(4, {(0, 1): 1.0, (2, 3): 1.0})
        b = cluster_batch(g, ClusterPartition(np.array([0, 0, 1, 1]), 2), 0)
        assert b.halo.size == 0

    def test_batches_cover_every_edge(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            X = rng.normal(size=(30, 4))
            g = build_knn_graph(X, 3)
            part = partition_graph(X, 4, seed=int(rng.integers(100)))
            union = set()
            for c in range(4):
                union |= {tuple(e) for e in cluster_batch(g, part, c).edges.tolist()}
            assert union == edge_set(g)

    def test_batch_adjacency_values(self):
        X = np.random.default_rng(5).normal(size=(15, 3))
        g = build_knn_graph(X, 3)
        adj = normalize_adjacency(g)
        part = partition_graph(X, 3, seed=1)
        b = cluster_batch(g, part, 1)
        local = batch_adjacency(adj, b).toarray()
        nodes = b.nodes
        n_core = len(b.core)
        full = adj.toarray()
        for i, u in enumerate(nodes):
            for j, v in enumerate(nodes):
                keep = i == j or i < n_core or j < n_core
                assert local[i, j] == (full[u, v] if keep else 0.0)
