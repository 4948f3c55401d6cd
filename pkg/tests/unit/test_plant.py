"""
Tests for network generation, the benchmark and held-input propagation.
"""
import json

import numpy as np
import pytest
import scipy.linalg

from src.core.exceptions import ConfigError, DimensionError, RangeError
from src.core.linalg import is_positive_definite, spectral
from src.models.table import TimeGrid
from src.schemas.system import NetworkSpec
from src.services.plant_service import (
    CIRCLE_BLOCK, SQUARE_BLOCK, build_benchmark, generate_network, interval_cost, interval_costs,
    load_system, place_nodes, propagate, sample_interval, save_system, transition_matrix
)
from src.services.table_service import build_table


class TestNetwork:
    """Tests for the spatially decaying network."""

    def test_single_square_node(self):
        spec = NetworkSpec(subsystem_count=1, type_assignment=["square"], positions=[(1.0, 1.0)])
        system = generate_network(spec)
        assert np.array_equal(system.A, SQUARE_BLOCK)
        assert np.array_equal(system.B, [[0.0], [1.0]])
        assert np.array_equal(system.Q, np.eye(2))
        assert np.array_equal(system.R, [[2.0]])

    def test_colocated_nodes_couple_by_identity(self):
        spec = NetworkSpec(subsystem_count=2, type_assignment=["square", "circle"],
                           positions=[(3.0, 3.0), (3.0, 3.0)])
        A = generate_network(spec).A
        assert np.allclose(A[0:2, 2:4], np.eye(2))
        assert np.allclose(A[2:4, 0:2], np.eye(2))
        assert np.array_equal(A[2:4, 2:4], CIRCLE_BLOCK)

    def test_coupling_decays_with_distance(self):
        spec = NetworkSpec(subsystem_count=2, decay_rate=1.0, type_assignment=["circle", "circle"],
                           positions=[(0.0, 0.0), (np.log(2.0), 0.0)])
        A = generate_network(spec).A
        assert np.allclose(A[0:2, 2:4], 0.5 * np.eye(2))

    def test_shapes(self, small_network_spec):
        system = generate_network(small_network_spec)
        assert (system.n, system.m) == (6, 3)
        assert np.array_equal(system.B, np.kron(np.eye(3), [[0.0], [1.0]]))

    def test_same_seed_same_plant(self):
        first = generate_network(NetworkSpec(subsystem_count=5, seed=42))
        second = generate_network(NetworkSpec(subsystem_count=5, seed=42))
        other = generate_network(NetworkSpec(subsystem_count=5, seed=43))
        assert np.array_equal(first.A, second.A)
        assert not np.array_equal(first.A, other.A)

    def test_positions_inside_region(self):
        layout = place_nodes(NetworkSpec(subsystem_count=50, region=4.0, seed=3))
        assert layout.positions.shape == (50, 2)
        assert np.all((layout.positions >= 0.0) & (layout.positions <= 4.0))
        assert set(layout.kinds) <= {"square", "circle"}

    def test_mismatched_assignment_rejected(self):
        with pytest.raises(ValueError):
            NetworkSpec(subsystem_count=2, type_assignment=["square"])


class TestBenchmark:
    """Tests for the LQR benchmark design."""

    def test_certificate_is_positive_definite(self, small_network_spec):
        system = generate_network(small_network_spec)
        benchmark = build_benchmark(system)
        assert is_positive_definite(benchmark.value_tilde)
        assert spectral(system.A + system.B @ benchmark.gain_tilde).is_hurwitz
        assert benchmark.residual <= 1e-8 * (1.0 + np.linalg.norm(benchmark.value_tilde, 2))

    def test_scalar_values(self, scalar_factory):
        benchmark = build_benchmark(scalar_factory(1.0))
        assert benchmark.value_tilde[0, 0] == pytest.approx(1.0 + np.sqrt(2.0), rel=1e-9)
        assert benchmark.benchmark_cost(np.array([2.0])) == pytest.approx(4.0 * (1.0 + np.sqrt(2.0)), rel=1e-9)


class TestPropagation:
    """Tests for the held-input state and the interval cost."""

    def test_scalar_closed_form(self, scalar_factory):
        system = scalar_factory(-1.0)
        table = build_table(system, TimeGrid(step=0.01, count=101))
        x = propagate(system, table, np.array([[-1.0]]), np.array([1.0]), 100)
        assert x[0] == pytest.approx(2.0 * np.exp(-1.0) - 1.0, rel=1e-9)

    def test_zero_index_is_identity(self, random_factory):
        system = random_factory(4)
        table = build_table(system, TimeGrid(step=0.01, count=11))
        F = np.ones((system.m, system.n))
        assert np.array_equal(transition_matrix(system, table, F, 0), np.eye(system.n))

    def test_matches_exponential_of_lifted_system(self, random_factory):
        system = random_factory(12)
        table = build_table(system, TimeGrid(step=0.01, count=51))
        F = np.random.default_rng(0).standard_normal((system.m, system.n))
        x = np.random.default_rng(1).standard_normal(system.n)

        lifted = np.zeros((system.n + system.m, system.n + system.m))
        lifted[:system.n, :system.n] = system.A
        lifted[:system.n, system.n:] = system.B
        expected = (scipy.linalg.expm(lifted * 0.5) @ np.concatenate([x, F @ x]))[:system.n]

        assert np.allclose(propagate(system, table, F, x, 50), expected, rtol=1e-9, atol=1e-11)

    def test_sample_interval_ends_at_propagate(self, random_factory):
        system = random_factory(13)
        table = build_table(system, TimeGrid(step=0.01, count=31))
        F = -np.ones((system.m, system.n))
        x = np.arange(1.0, system.n + 1.0)
        samples = sample_interval(system, table, F, x, 20)
        assert samples.shape == (21, system.n)
        assert np.allclose(samples[0], x)
        assert np.allclose(samples[-1], propagate(system, table, F, x, 20))

    def test_cost_for_pure_integrator(self, scalar_factory):
        system = scalar_factory(0.0)
        table = build_table(system, TimeGrid(step=0.1, count=11))
        f, xi = -0.5, 1.0
        expected = xi + f * xi ** 2 + f ** 2 * (xi ** 3 / 3.0 + xi)
        assert interval_cost(table, np.array([[f]]), np.array([1.0]), 10) == pytest.approx(expected, rel=1e-10)

    def test_cost_is_nonnegative(self, random_factory):
        system = random_factory(14)
        table = build_table(system, TimeGrid(step=0.01, count=21))
        rng = np.random.default_rng(2)
        for index in range(21):
            F = rng.standard_normal((system.m, system.n))
            x = rng.standard_normal(system.n)
            assert interval_cost(table, F, x, index) >= 0.0

    def test_vector_costs_match_pointwise(self, random_factory):
        """Both cost paths apply the same clamp at zero."""
        system = random_factory(16)
        table = build_table(system, TimeGrid(step=0.01, count=41))
        rng = np.random.default_rng(3)
        F = rng.standard_normal((system.m, system.n))
        x = rng.standard_normal(system.n)

        costs = interval_costs(table, F, x)

        assert costs[0] == 0.0
        assert np.all(costs >= 0.0)
        for index in range(41):
            assert costs[index] == pytest.approx(interval_cost(table, F, x, index), rel=1e-12, abs=1e-15)

    def test_wrong_gain_shape(self, random_factory):
        system = random_factory(15)
        table = build_table(system, TimeGrid(step=0.01, count=3))
        with pytest.raises(DimensionError):
            propagate(system, table, np.ones((system.n, system.n)), np.ones(system.n), 1)

    def test_index_out_of_range(self, random_factory):
        system = random_factory(15)
        table = build_table(system, TimeGrid(step=0.01, count=3))
        with pytest.raises(RangeError):
            propagate(system, table, np.zeros((system.m, system.n)), np.ones(system.n), 3)


class TestSystemFiles:
    """Tests for the JSON system document."""

    def test_save_then_load(self, tmp_path, small_network_spec):
        system = generate_network(small_network_spec)
        path = tmp_path / "nested" / "system.json"
        save_system(system, str(path))

        loaded = load_system(str(path))

        assert np.array_equal(loaded.A, system.A)
        assert np.array_equal(loaded.R, system.R)
        assert set(json.loads(path.read_text())) == {"n", "m", "A", "B", "Q", "R"}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_system(str(tmp_path / "absent.json"))

    def test_wrong_entry_count(self, tmp_path):
        path = tmp_path / "system.json"
        path.write_text(json.dumps({"n": 2, "m": 1, "A": [0, 1, 0], "B": [0, 1], "Q": [1, 0, 0, 1], "R": [1]}))
        with pytest.raises(ConfigError):
            load_system(str(path))
