from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ricciframe.graph import (
    Graph,
    LabeledPartition,
    build_normalized_adjacency,
    build_normalized_laplacian,
    clustering_coefficient,
    eigendecompose,
    generate,
    homophily_measure,
    random_connected_graph,
    spectral_radius,
    triangle_count,
)


@st.composite
def graphs(draw, max_n=12, weighted=False):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    w = None
    if weighted and chosen:
        w = draw(st.lists(st.floats(0.1, 5.0), min_size=len(chosen), max_size=len(chosen)))
    return Graph(n, chosen, w)


class TestGraphValidation:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(3, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1), (1, 0)])

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 1)], [0.0])

    def test_rejects_bad_label_length(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1)], labels=[0, 1])

    def test_rejects_bad_feature_rows(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1)], features=np.zeros((2, 4)))

    def test_edges_canonical_and_sorted(self):
        g = Graph(4, [(3, 2), (1, 0), (2, 0)])
        assert g.edges == ((0, 1), (0, 2), (2, 3))
        assert g.has_edge(3, 2) and not g.has_edge(1, 3)

    def test_remove_edges_is_new_value(self, k3):
        h = k3.remove_edges([(2, 0)])
        assert k3.num_edges == 3 and h.num_edges == 2
        with pytest.raises(KeyError):
            h.remove_edges([(0, 2)])


class TestNormalizedOperators:
    def test_k2_adjacency(self, k2):
        np.testing.assert_allclose(build_normalized_adjacency(k2), [[0.5, 0.5], [0.5, 0.5]])

    def test_isolated_node_adjacency(self):
        np.testing.assert_allclose(build_normalized_adjacency(Graph(1)), [[1.0]])

    def test_c4_adjacency(self, c4):
        a = build_normalized_adjacency(c4)
        np.testing.assert_allclose(np.diag(a), 1 / 3)
        assert a[0, 1] == pytest.approx(1 / 3) and a[0, 3] == pytest.approx(1 / 3)
        assert a[0, 2] == 0.0 and a[1, 3] == 0.0

    def test_k2_laplacian_and_spectrum(self, k2):
        lap = build_normalized_laplacian(k2)
        np.testing.assert_allclose(lap, [[0.5, -0.5], [-0.5, 0.5]])
        np.testing.assert_allclose(eigendecompose(lap).eigenvalues, [0.0, 1.0], atol=1e-12)

    def test_single_node_laplacian(self):
        np.testing.assert_allclose(build_normalized_laplacian(Graph(1)), [[0.0]])

    def test_no_self_loop_isolated_node(self):
        lap = build_normalized_laplacian(Graph(3, [(0, 1)]), self_loops=False)
        assert lap[2, 2] == 0.0
        np.testing.assert_allclose(lap[:2, :2], [[1, -1], [-1, 1]])

    @given(graphs(weighted=True))
    def test_laplacian_psd_bounded(self, g):
        lap = build_normalized_laplacian(g)
        vals = np.linalg.eigvalsh(lap)
        assert vals.min() >= -1e-9 and vals.max() <= 2 + 1e-9
        assert vals.min() == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_array_equal(build_normalized_adjacency(g) + lap, np.eye(g.n))


class TestEigendecompose:
    def test_identity(self):
        d = eigendecompose(np.eye(4))
        np.testing.assert_allclose(d.eigenvalues, 1.0)
        np.testing.assert_allclose(d.eigenvectors.T @ d.eigenvectors, np.eye(4), atol=1e-12)

    def test_diag(self):
        d = eigendecompose(np.diag([0.0, 1.0]))
        np.testing.assert_allclose(d.eigenvalues, [0.0, 1.0])
        np.testing.assert_allclose(np.abs(d.eigenvectors), np.eye(2))

    def test_k2_laplacian(self, k2):
        d = eigendecompose(build_normalized_laplacian(k2))
        np.testing.assert_allclose(d.eigenvalues, [0.0, 1.0], atol=1e-12)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(d.eigenvectors[:, 0]), [s, s])
        np.testing.assert_allclose(d.eigenvectors[:, 1] * np.sign(d.eigenvectors[0, 1]), [s, -s])

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @given(graphs(weighted=True))
    def test_reconstruction_and_orthonormality(self, g):
        lap = build_normalized_laplacian(g)
        d = eigendecompose(lap)
        assert np.max(np.abs(d.reconstruct() - lap)) < 1e-8
        assert np.max(np.abs(d.eigenvectors.T @ d.eigenvectors - np.eye(g.n))) < 1e-8
        assert np.all(np.diff(d.eigenvalues) >= 0)


class TestStatistics:
    def test_homophily_all_same(self, k4):
        assert homophily_measure(k4.with_labels([3, 3, 3, 3])) == 1.0

    def test_homophily_alternating_cycle(self, c4):
        assert homophily_measure(c4.with_labels([0, 1, 0, 1])) == 0.0

    def test_homophily_star(self):
        g = generate("star", {"leaves": 3}).with_labels([0, 1, 1, 1])
        assert homophily_measure(g) == 0.0

    def test_homophily_skips_isolated(self):
        g = Graph(3, [(0, 1)], labels=[0, 0, 1])
        assert homophily_measure(g) == 1.0

    def test_homophily_needs_labels(self, k3):
        with pytest.raises(ValueError):
            homophily_measure(k3)

    @given(graphs(), st.integers(1, 3), st.integers(0, 1000))
    def test_homophily_in_unit_interval(self, g, classes, seed):
        if g.num_edges == 0:
            return
        labels = np.random.default_rng(seed).integers(0, classes, size=g.n)
        assert 0.0 <= homophily_measure(g.with_labels(labels)) <= 1.0

    def test_triangle_counts(self, k3, c4, k4):
        assert triangle_count(k3, (0, 1)) == 1
        assert triangle_count(c4, (0, 1)) == 0
        assert triangle_count(k4, (2, 3)) == 2
        with pytest.raises(KeyError):
            triangle_count(c4, (0, 2))

    @given(graphs())
    def test_triangle_count_symmetric(self, g):
        for i, j in g.edges:
            assert triangle_count(g, (i, j)) == triangle_count(g, (j, i))

    def test_clustering(self, k3):
        assert clustering_coefficient(k3, 0) == 1.0
        assert clustering_coefficient(generate("path", {"n": 3}), 1) == 0.0
        assert clustering_coefficient(generate("complete", {"n": 6}), 4) == 1.0
        assert clustering_coefficient(generate("path", {"n": 3}), 0) == 0.0


class TestGenerators:
    def test_sizes(self):
        g = generate("cycle", {"n": 4})
        assert (g.n, g.num_edges) == (4, 4)
        assert generate("complete", {"n": 5}).num_edges == 10

    def test_sbm_edge_counts(self):
        g = generate("sbm", {"sizes": [20, 20], "p_in": 0.3, "p_out": 0.05}, seed=7)
        lab = g.labels
        intra = sum(lab[i] == lab[j] for i, j in g.edges)
        inter = g.num_edges - intra
        for count, pairs, p in ((intra, 2 * 190, 0.3), (inter, 400, 0.05)):
            mean, sd = pairs * p, np.sqrt(pairs * p * (1 - p))
            assert abs(count - mean) <= 3 * sd
        np.testing.assert_array_equal(lab, [0] * 20 + [1] * 20)

    def test_reproducible(self):
        p = {"sizes": [8, 8, 8], "p_in": 0.5, "p_out": 0.1}
        assert generate("sbm", p, seed=3) == generate("sbm", p, seed=3)
        assert generate("sbm", p, seed=3) != generate("sbm", p, seed=4)

    def test_double_star_and_barbell(self):
        ds = generate("double_star", {"leaves": 2})
        assert ds.n == 6 and ds.degree(0) == 3 and ds.degree(1) == 3
        bb = generate("barbell", {"clique": 4, "bridge": 2})
        assert bb.n == 9 and bb.num_edges == 6 + 6 + 2 and bb.is_connected()

    def test_bipartite_blocks(self):
        g = generate("bipartite_blocks", {"blocks": 2, "side": 3, "p_in": 0.0, "p_link": 0.0})
        assert g.num_edges == 2 * 9
        assert homophily_measure(g) == 0.0

    @pytest.mark.parametrize("params", [{"n": 0}, {"n": 3, "p": 1.5}])
    def test_invalid_params(self, params):
        with pytest.raises(ValueError):
            generate("gnp", params)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate("hypercube", {"n": 3})

    def test_random_connected(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert random_connected_graph(int(rng.integers(2, 15)), 0.1, rng).is_connected()


def test_stratified_partition_covers_classes():
    labels = np.array([0] * 10 + [1] * 3 + [2])
    part = LabeledPartition.stratified(labels, 0.2, seed=1)
    assert part.missing_train_classes() == []
    assert part.train_mask.sum() == 2 + 1 + 1


def test_relabel_permutes_structure(double_star):
    perm = [5, 4, 3, 2, 1, 0]
    h = double_star.relabel(perm)
    assert h.has_edge(5, 4) and h.degree(5) == 3


def test_spectral_radius_k2(k2):
    assert spectral_radius(build_normalized_laplacian(k2)) == pytest.approx(1.0)
