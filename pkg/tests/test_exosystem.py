"""Signal generators, disturbance ensembles and the cancellation construction.

Ground truth:
- generator for {constant, omega=2} is blockdiag(0, [[0,-2],[2,0]])
- observability of that block with row [1,0,1]: [[1,0,1],[0,2,0],[0,0,-4]]
- rotation blocks evolve by plane rotation, so state norms are conserved
"""

import numpy as np
import pytest

from syncnet.exosystem import (
    AuxEnsemble,
    DisturbanceEnsemble,
    Exosystem,
    NodeSignal,
    SignalSpec,
    canonical_generator,
    design_aux_systems,
    observability_matrix,
)
from syncnet.netgraph import WeightedGraph, build_laplacian, projection_pair
from oracles import random_connected_graph


class TestSignalSpec:
    def test_dim(self):
        assert SignalSpec(True, ()).dim == 1
        assert SignalSpec(False, (1.0,)).dim == 2
        assert SignalSpec(True, (1.0, 2.0)).dim == 5

    def test_frequencies_sorted_distinct_positive(self):
        spec = SignalSpec(False, (2.0, 1.0))
        assert spec.frequencies == (1.0, 2.0)
        with pytest.raises(ValueError):
            SignalSpec(False, (1.0, 1.0))
        with pytest.raises(ValueError):
            SignalSpec(True, (-1.0,))
        with pytest.raises(ValueError):
            SignalSpec(False, ())

    def test_denominator(self):
        # s * (s^2 + 4) for {constant, omega=2}
        den = SignalSpec(True, (2.0,)).denominator()
        np.testing.assert_allclose(den.coeffs, [0.0, 4.0, 0.0, 1.0])
        np.testing.assert_allclose(SignalSpec(True, ()).denominator().coeffs, [0.0, 1.0])

    def test_covers_and_union(self):
        big = SignalSpec(True, (1.0, 2.0))
        small = SignalSpec(False, (2.0,))
        assert big.covers(small)
        assert not small.covers(big)
        merged = SignalSpec.union([small, SignalSpec(True, (1.0,))])
        assert merged == SignalSpec(True, (1.0, 2.0))


class TestCanonicalGenerator:
    def test_constant_and_one_tone(self):
        a, c = canonical_generator(SignalSpec(True, (2.0,)))
        np.testing.assert_array_equal(
            a, [[0.0, 0.0, 0.0], [0.0, 0.0, -2.0], [0.0, 2.0, 0.0]]
        )
        # one output per block: the constant state plus each cosine coordinate
        np.testing.assert_array_equal(c, [1.0, 1.0, 0.0])

    def test_constant_only(self):
        a, c = canonical_generator(SignalSpec(True, ()))
        np.testing.assert_array_equal(a, [[0.0]])
        np.testing.assert_array_equal(c, [1.0])

    def test_single_tone(self):
        a, c = canonical_generator(SignalSpec(False, (1.0,)))
        np.testing.assert_array_equal(a, [[0.0, -1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(c, [1.0, 0.0])

    def test_skew_symmetry(self):
        a, _ = canonical_generator(SignalSpec(True, (0.5, 1.0, 3.0)))
        np.testing.assert_array_equal(a, -a.T)


class TestObservability:
    def test_hand_example(self):
        a = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -2.0], [0.0, 2.0, 0.0]])
        obs = observability_matrix(a, [1.0, 0.0, 1.0])
        np.testing.assert_array_equal(
            obs, [[1.0, 0.0, 1.0], [0.0, 2.0, 0.0], [0.0, 0.0, -4.0]]
        )

    def test_scalar(self):
        np.testing.assert_array_equal(observability_matrix([[0.0]], [1.0]), [[1.0]])

    def test_rotation(self):
        obs = observability_matrix([[0.0, -1.0], [1.0, 0.0]], [1.0, 0.0])
        np.testing.assert_array_equal(obs, [[1.0, 0.0], [0.0, -1.0]])


class TestExosystem:
    def test_constant_output(self):
        exo = Exosystem([[0.0]], [1.0], [0.26])
        for t in (0.0, 1.7, 40.0):
            state, out = exo.evolve(t)
            assert out == pytest.approx(0.26, abs=1e-15)

    def test_two_rad_cosine(self):
        a, c = canonical_generator(SignalSpec(False, (2.0,)))
        exo = Exosystem(a, c, [1.0, 0.0])
        for t in np.linspace(0.0, 5.0, 41):
            _, out = exo.evolve(t)
            assert out == pytest.approx(np.cos(2.0 * t), abs=1e-12)

    def test_norm_preserved_per_call(self):
        a, c = canonical_generator(SignalSpec(True, (1.0, 2.5)))
        x0 = np.array([0.5, 1.0, -0.3, 0.2, 0.9])
        exo = Exosystem(a, c, x0)
        rot0 = np.linalg.norm(x0[1:])
        for t in np.linspace(0.0, 100.0, 501):
            state, _ = exo.evolve(t)
            assert abs(np.linalg.norm(state[1:]) - rot0) <= 1e-12
            assert state[0] == x0[0]

    def test_unobservable_pair_rejected(self):
        a, _ = canonical_generator(SignalSpec(True, (1.0,)))
        with pytest.raises(ValueError):
            Exosystem(a, [1.0, 0.0, 0.0], [1.0, 1.0, 0.0])


class TestNodeSignal:
    def test_value_series(self):
        sig = NodeSignal(0.3, ((1.0, 0.8, 0.4), (2.5, -0.6, 1.9)))
        t = 1.3
        expected = 0.3 + 0.8 * np.cos(1.0 * t + 0.4) - 0.6 * np.cos(2.5 * t + 1.9)
        assert sig.value(t) == pytest.approx(expected, abs=1e-15)

    def test_duplicate_frequency_rejected(self):
        with pytest.raises(ValueError):
            NodeSignal(0.0, ((1.0, 1.0, 0.0), (1.0, 0.5, 0.2)))

    def test_spec_and_zero(self):
        assert NodeSignal(0.0, ()).is_zero
        assert NodeSignal(0.1, ((2.0, 1.0, 0.0),)).spec() == SignalSpec(True, (2.0,))


class TestDisturbanceEnsemble:
    def test_closed_form_matches_direct_series(self):
        """Generator evolution against direct cosine evaluation, 1e-12."""
        signals = [
            NodeSignal(0.3, ((1.0, 0.8, 0.4), (2.5, -0.6, 1.9))),
            NodeSignal(-0.2, ((2.5, 1.1, 0.0),)),
        ]
        spec = SignalSpec(True, (1.0, 2.5))
        ens = DisturbanceEnsemble.from_node_signals(signals, spec=spec)
        times = np.linspace(0.0, 40.0, 801)
        grid = ens.phi_grid(times)
        for k, t in enumerate(times):
            for i, sig in enumerate(signals):
                assert abs(grid[i, k] - sig.value(t)) <= 1e-12

    def test_coverage_error(self):
        with pytest.raises(ValueError):
            DisturbanceEnsemble.from_node_signals(
                [NodeSignal(0.0, ((3.0, 1.0, 0.0),))], spec=SignalSpec(True, ())
            )

    def test_phi_matches_grid(self):
        ens = DisturbanceEnsemble.from_node_signals(
            [NodeSignal(0.5, ()), NodeSignal(-0.5, ())]
        )
        np.testing.assert_allclose(ens.phi(3.0), ens.phi_grid([3.0])[:, 0])


class TestAuxiliaryDesign:
    def test_constant_reference_case(self):
        """Centered constants land exactly in the Laplacian image; 1e-10."""
        phi = [0.26, 0.8, 0.05, 0.55]
        ens = DisturbanceEnsemble.from_node_signals([NodeSignal(v, ()) for v in phi])
        lap = build_laplacian(WeightedGraph.cycle(4))
        aux = design_aux_systems(ens, lap)
        pi = projection_pair(4).centering
        for t in (0.0, 2.0, 17.0):
            resid = pi @ ens.phi(t) - lap.matrix @ aux.lam(t)
            assert np.linalg.norm(resid) <= 1e-10

    def test_identical_disturbances_give_zero(self):
        sig = NodeSignal(0.7, ((2.0, 0.4, 0.1),))
        ens = DisturbanceEnsemble.from_node_signals([sig] * 4)
        lap = build_laplacian(WeightedGraph.cycle(4))
        aux = design_aux_systems(ens, lap)
        np.testing.assert_allclose(aux.z0s, 0.0, atol=1e-12)
        np.testing.assert_allclose(aux.lam_grid(np.linspace(0, 5, 11)), 0.0, atol=1e-12)

    def test_zero_sum_constants_reproduced_exactly(self):
        phi = np.array([-0.155, 0.385, -0.365, 0.135])
        ens = DisturbanceEnsemble.from_node_signals([NodeSignal(v, ()) for v in phi])
        lap = build_laplacian(WeightedGraph.cycle(4))
        aux = design_aux_systems(ens, lap)
        # zero-sum: the projector leaves phi untouched
        np.testing.assert_allclose(lap.matrix @ aux.lam(0.0), phi, atol=1e-12)

    def test_thirty_random_scenarios(self):
        """Cancellation identity on random graphs and signal classes, 1e-7."""
        rng = np.random.RandomState(42)
        worst = 0.0
        times = np.arange(0.0, 20.0 + 1e-9, 0.01)
        for _ in range(30):
            n = rng.randint(3, 7)
            graph = WeightedGraph(n, random_connected_graph(rng, n, 0.2, 3.0))
            lap = build_laplacian(graph)
            has_const = bool(rng.rand() < 0.7)
            n_freq = rng.randint(0 if has_const else 1, 3)
            freqs = tuple(sorted(rng.uniform(0.3, 5.0, size=n_freq)))
            signals = []
            for _ in range(n):
                const = float(rng.uniform(-1.0, 1.0)) if has_const else 0.0
                sins = tuple(
                    (w, float(rng.uniform(-1.5, 1.5)), float(rng.uniform(0.0, 2.0 * np.pi)))
                    for w in freqs
                )
                signals.append(NodeSignal(const, sins))
            spec = SignalSpec(has_const, freqs)
            ens = DisturbanceEnsemble.from_node_signals(signals, spec=spec)
            aux = design_aux_systems(ens, lap)
            pi = projection_pair(n).centering
            resid = pi @ ens.phi_grid(times) - lap.matrix @ aux.lam_grid(times)
            worst = max(worst, float(np.sqrt((resid * resid).sum(axis=0)).max()))
        assert worst <= 1e-7

    def test_unobservable_rows_rejected(self):
        ens = DisturbanceEnsemble.from_node_signals(
            [NodeSignal(0.1, ((1.0, 0.5, 0.0),)), NodeSignal(0.2, ((1.0, 0.3, 1.0),))]
        )
        lap = build_laplacian(WeightedGraph(2, [(0, 1, 1.0)]))
        dead_rows = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])  # misses the tone
        with pytest.warns(RuntimeWarning, match="near-unobservable"):
            with pytest.raises(ValueError, match="unobservable"):
                design_aux_systems(ens, lap, b_rows=dead_rows)

    def test_aux_ensemble_shape_validation(self):
        with pytest.raises(ValueError):
            AuxEnsemble(SignalSpec(True, ()), np.ones((2, 1)), np.ones((3, 1)))
