"""Graph, Laplacian, spectral and projection utilities.

Ground truth used below:
- unit 4-cycle Laplacian spectrum {0, 2, 2, 4} (circulant: 2 - 2cos(2*pi*k/4))
- path 1-2-3 spectrum {0, 1, 3}, algebraic connectivity 1
- pseudoinverse of the unit 4-cycle has diagonal 5/16
- pseudoinverse of a single unit edge is [[0.25, -0.25], [-0.25, 0.25]]
"""

import itertools

import numpy as np
import pytest

from syncnet.lti import char_poly
from syncnet.netgraph import (
    GraphConnectivityError,
    WeightedGraph,
    algebraic_connectivity,
    bfs_reachable,
    build_laplacian,
    is_connected,
    laplacian_pseudoinverse,
    projection_pair,
    symmetric_eigenvalues,
)
from oracles import clustered_real_roots, poly_from_roots, random_connected_graph


class TestWeightedGraph:
    def test_cycle_edges(self):
        g = WeightedGraph.cycle(4)
        assert g.n_nodes == 4
        assert set((i, j) for i, j, _ in g.edges) == {(0, 1), (1, 2), (2, 3), (0, 3)}

    def test_edge_normalization(self):
        g = WeightedGraph(3, [(2, 0, 1.5)])
        assert g.edges == ((0, 2, 1.5),)

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            WeightedGraph(3, [(1, 1, 1.0)])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError):
            WeightedGraph(3, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            WeightedGraph(2, [(0, 1, 0.0)])

    def test_with_weights(self):
        g = WeightedGraph.path(3)
        h = g.with_weights([2.0, 3.0])
        assert h.edges == ((0, 1, 2.0), (1, 2, 3.0))

    def test_incidence_laplacian_consistency(self):
        g = WeightedGraph.cycle(5).with_weights([1.0, 2.0, 0.5, 1.5, 3.0])
        inc = g.incidence_matrix()
        lap = inc @ np.diag(g.weight_vector) @ inc.T
        np.testing.assert_allclose(lap, build_laplacian(g).matrix, atol=1e-14)


class TestLaplacian:
    def test_unit_cycle4(self):
        lap = build_laplacian(WeightedGraph.cycle(4)).matrix
        expected = np.array(
            [
                [2.0, -1.0, 0.0, -1.0],
                [-1.0, 2.0, -1.0, 0.0],
                [0.0, -1.0, 2.0, -1.0],
                [-1.0, 0.0, -1.0, 2.0],
            ]
        )
        np.testing.assert_array_equal(lap, expected)

    def test_single_node(self):
        lap = build_laplacian(WeightedGraph(1, ())).matrix
        np.testing.assert_array_equal(lap, np.zeros((1, 1)))

    def test_path3(self):
        lap = build_laplacian(WeightedGraph.path(3)).matrix
        expected = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
        np.testing.assert_array_equal(lap, expected)

    def test_random_laplacian_invariants(self):
        rng = np.random.RandomState(5)
        for _ in range(25):
            n = rng.randint(2, 11)
            g = WeightedGraph(n, random_connected_graph(rng, n))
            lap = build_laplacian(g).matrix
            np.testing.assert_allclose(lap @ np.ones(n), 0.0, atol=1e-12)
            np.testing.assert_array_equal(lap, lap.T)
            assert symmetric_eigenvalues(lap)[0] >= -1e-10


class TestSpectrum:
    def test_cycle4_eigenvalues(self):
        eigs = symmetric_eigenvalues(build_laplacian(WeightedGraph.cycle(4)).matrix)
        np.testing.assert_allclose(eigs, [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(symmetric_eigenvalues(np.eye(3)), [1.0, 1.0, 1.0])

    def test_path3_eigenvalues(self):
        eigs = symmetric_eigenvalues(build_laplacian(WeightedGraph.path(3)).matrix)
        np.testing.assert_allclose(eigs, [0.0, 1.0, 3.0], atol=1e-12)

    def test_eigenvector_reconstruction(self):
        rng = np.random.RandomState(9)
        a = rng.uniform(-1.0, 1.0, size=(7, 7))
        a = a + a.T
        eigs, vecs = symmetric_eigenvalues(a, vectors=True)
        recon = vecs @ np.diag(eigs) @ vecs.T
        assert np.max(np.abs(recon - a)) <= 1e-8 * np.linalg.norm(a)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(7), atol=1e-10)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            symmetric_eigenvalues(np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_exhaustive_small_matrices_vs_char_poly(self):
        """Jacobi vs characteristic-polynomial roots, all entries in {-2..2}.

        Well-separated spectra are compared root to root (the root-finder
        oracle is exact there).  Near-degenerate spectra make coefficient-
        to-root extraction sqrt(eps)-conditioned no matter the root finder,
        so those fall back to comparing the characteristic coefficients
        rebuilt from the computed eigenvalues, which is the well-posed
        direction.  Genuine eigenvalue gaps in this family are never below
        0.236, so the 1e-3 split threshold cannot misclassify.
        """
        for a, b, c in itertools.product(range(-2, 3), repeat=3):
            m = np.array([[a, b], [b, c]], dtype=float)
            self._check_against_char_poly(m)
        for combo in itertools.product(range(-2, 3), repeat=6):
            d0, d1, d2, o01, o02, o12 = combo
            m = np.array(
                [[d0, o01, o02], [o01, d1, o12], [o02, o12, d2]], dtype=float
            )
            self._check_against_char_poly(m)

    @staticmethod
    def _check_against_char_poly(m):
        eigs = symmetric_eigenvalues(m)
        cp = char_poly(m).coeffs
        if np.all(np.diff(eigs) > 1e-3):
            roots = clustered_real_roots(cp)
            assert np.max(np.abs(eigs - roots)) <= 1e-8
        else:
            rebuilt = poly_from_roots(eigs)
            assert np.max(np.abs(rebuilt - cp)) <= 1e-10


class TestConnectivity:
    def test_cycle4_mu2(self):
        assert algebraic_connectivity(
            build_laplacian(WeightedGraph.cycle(4))
        ) == pytest.approx(2.0, abs=1e-9)

    def test_path3_mu2(self):
        assert algebraic_connectivity(
            build_laplacian(WeightedGraph.path(3))
        ) == pytest.approx(1.0, abs=1e-9)

    def test_disconnected_mu2_zero(self):
        lap = build_laplacian(WeightedGraph(2, ()))
        assert algebraic_connectivity(lap) == pytest.approx(0.0, abs=1e-12)
        assert not is_connected(lap)

    def test_bfs_agrees_with_spectral(self):
        rng = np.random.RandomState(21)
        for _ in range(20):
            n = rng.randint(2, 9)
            if rng.rand() < 0.5:
                g = WeightedGraph(n, random_connected_graph(rng, n))
                expect = True
            else:
                # two blocks with no bridge
                k = n // 2
                edges = [(i, i + 1, 1.0) for i in range(k - 1)]
                edges += [(i, i + 1, 1.0) for i in range(k, n - 1)]
                g = WeightedGraph(n, edges)
                expect = n <= 1
            lap = build_laplacian(g)
            assert is_connected(lap) == expect
            assert bool(bfs_reachable(g, 0).all()) == expect


class TestProjection:
    def test_two_node_pair(self):
        pair = projection_pair(2)
        np.testing.assert_allclose(
            pair.helmert, [[1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)]]
        )
        np.testing.assert_allclose(
            pair.centering, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15
        )

    def test_annihilates_constants(self):
        pair = projection_pair(4)
        np.testing.assert_allclose(pair.centering @ np.ones(4), 0.0, atol=1e-15)

    def test_mean_subtraction(self):
        pair = projection_pair(4)
        np.testing.assert_allclose(
            pair.centering @ np.array([1.0, 2.0, 3.0, 4.0]),
            [-1.5, -0.5, 0.5, 1.5],
            atol=1e-14,
        )

    @pytest.mark.parametrize("n", [2, 3, 4, 7, 12])
    def test_identities(self, n):
        pair = projection_pair(n)
        pi, q = pair.centering, pair.helmert
        assert np.max(np.abs(q @ np.ones(n))) <= 1e-12
        assert np.max(np.abs(q @ q.T - np.eye(n - 1))) <= 1e-12
        assert np.max(np.abs(q.T @ q - pi)) <= 1e-12
        assert np.max(np.abs(pi @ pi - pi)) <= 1e-12
        np.testing.assert_array_equal(pi, pi.T)


class TestPseudoinverse:
    def test_cycle4_diagonal(self):
        gamma = laplacian_pseudoinverse(build_laplacian(WeightedGraph.cycle(4)))
        np.testing.assert_allclose(np.diag(gamma), 0.3125, atol=1e-12)

    def test_single_edge(self):
        gamma = laplacian_pseudoinverse(build_laplacian(WeightedGraph(2, [(0, 1, 1.0)])))
        np.testing.assert_allclose(
            gamma, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-13
        )

    def test_disconnected_raises(self):
        with pytest.raises(GraphConnectivityError):
            laplacian_pseudoinverse(build_laplacian(WeightedGraph(3, [(0, 1, 1.0)])))

    def test_identities_random_graphs(self):
        """L Gamma L = L, Gamma L Gamma = Gamma, L Gamma symmetric; 50 graphs."""
        rng = np.random.RandomState(17)
        for _ in range(50):
            n = rng.randint(2, 11)
            g = WeightedGraph(n, random_connected_graph(rng, n, 0.01, 2.0))
            lap = build_laplacian(g)
            l = lap.matrix
            gamma = laplacian_pseudoinverse(lap)
            pi = projection_pair(n).centering
            assert np.max(np.abs(l @ gamma @ l - l)) <= 1e-8
            assert np.max(np.abs(gamma @ l @ gamma - gamma)) <= 1e-8
            assert np.max(np.abs(l @ gamma - (l @ gamma).T)) <= 1e-8
            assert np.max(np.abs(l @ gamma - pi)) <= 1e-8
