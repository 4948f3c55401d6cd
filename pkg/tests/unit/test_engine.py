"""
Tests for the self-triggered loop, the run metrics and the comparison run.
"""
import numpy as np
import pytest

from src.core.exceptions import GridTooCoarseError, InputError
from src.models.run import MuDenominator, RunConfig, TriggerRecord
from src.models.system import Benchmark
from src.models.table import TimeGrid
from src.services.engine_service import benchmark_run, compute_metrics, run_algorithm
from src.services.plant_service import build_benchmark, generate_network


def _config(ctx, x0, k_max=5, **overrides):
    values = dict(alpha=ctx.alpha, gamma=0.001, eta=0.001, k_max=k_max, x0=x0, grid=ctx.grid)
    values.update(overrides)
    return RunConfig(**values)


def _run(ctx, config):
    return run_algorithm(ctx.system, ctx.benchmark, ctx.table, config)


@pytest.fixture
def network_context(context_factory, small_network_spec):
    return context_factory(generate_network(small_network_spec), alpha=1.15, count=301)


@pytest.fixture
def network_x0(network_context):
    return np.random.default_rng(11).standard_normal(network_context.system.n)


def _record(k, F, x, delta, cost=0.0):
    x = np.asarray(x, dtype=float)
    F = np.asarray(F, dtype=float)
    return TriggerRecord(k=k, t=0.0, delta=delta, grid_index=int(delta * 100), F=F, x=x, u=F @ x,
                         interval_cost=cost, converged=True, state_norm=float(np.linalg.norm(x)))


def _scalar_dwell_oracle(a, q, r, alpha, step, count):
    """
    Closed-form dwell index, state ratio and unit-state cost for b = 1 under
    the held benchmark input u = f x(t_k), f = -p / r.
    """
    p = r * (a + np.sqrt(a * a + q / r))
    f = -p / r
    c = f / a
    xi = np.arange(count) * step
    phi = (1.0 + c) * np.exp(a * xi) - c
    # integral of phi^2 over [0, xi]
    phi_sq = ((1.0 + c) ** 2 * np.expm1(2.0 * a * xi) / (2.0 * a)
              - 2.0 * c * (1.0 + c) * np.expm1(a * xi) / a + c * c * xi)
    cost = q * phi_sq + r * f * f * xi
    g = cost + alpha * p * (phi ** 2 - 1.0)
    violated = np.flatnonzero(g[1:] > 1e-9 * (1.0 + p))
    index = int(violated[0]) if violated.size else count - 1
    return index, float(phi[index]), float(cost[index])


class TestRunAlgorithm:
    """Tests for the trigger loop."""

    def test_stable_scalar_drops_the_gain(self, context_factory, scalar_factory):
        ctx = context_factory(scalar_factory(-1.0, r=2.0), alpha=1.3, count=201)
        result = _run(ctx, _config(ctx, [1.0], k_max=3))

        assert len(result.records) == 3
        for record in result.records:
            assert abs(record.F[0, 0]) < 1e-4
            assert record.delta == pytest.approx(ctx.grid.horizon)

    def test_grid_too_coarse(self, context_factory, scalar_factory):
        ctx = context_factory(scalar_factory(1.0), alpha=1.15, step=2.0, count=3)
        with pytest.raises(GridTooCoarseError):
            _run(ctx, _config(ctx, [1.0], k_max=2))

    def test_grid_mismatch(self, stable_scalar_context):
        ctx = stable_scalar_context
        config = _config(ctx, [1.0], grid=TimeGrid(step=0.02, count=101))
        with pytest.raises(InputError):
            _run(ctx, config)

    def test_deterministic(self, network_context, network_x0):
        first = _run(network_context, _config(network_context, network_x0))
        second = _run(network_context, _config(network_context, network_x0))
        assert [r.delta for r in first.records] == [r.delta for r in second.records]
        for a, b in zip(first.records, second.records):
            assert np.array_equal(a.F, b.F)
        assert np.array_equal(first.final_state, second.final_state)

    def test_transition_chain(self, network_context, network_x0):
        result = _run(network_context, _config(network_context, network_x0))
        assert np.allclose(result.transition @ network_x0, result.final_state, rtol=1e-8, atol=1e-10)

    def test_intervals_chain_in_time(self, network_context, network_x0):
        result = _run(network_context, _config(network_context, network_x0))
        for previous, current in zip(result.records, result.records[1:]):
            assert current.t == pytest.approx(previous.t + previous.delta)
            assert previous.delta > 0.0

    def test_cost_telescopes_below_bound(self, network_context, network_x0):
        ctx = network_context
        result = _run(ctx, _config(ctx, network_x0))
        benchmark = ctx.benchmark

        spent = sum(record.interval_cost for record in result.records)
        decrease = benchmark.lyapunov_value(network_x0) - benchmark.lyapunov_value(result.final_state)
        assert spent <= ctx.alpha * decrease + 1e-6 * (1.0 + decrease)
        assert result.metrics.total_cost <= ctx.alpha * benchmark.benchmark_cost(network_x0) * (1.0 + 1e-6)
        for record in result.records:
            assert record.lyapunov_value >= benchmark.lyapunov_value(result.final_state)

    def test_forced_benchmark_gain(self, network_context, network_x0):
        ctx = network_context
        result = _run(ctx, _config(ctx, network_x0, force_benchmark_gain=True))
        for record in result.records:
            assert np.array_equal(record.F, ctx.benchmark.gain_tilde)
            assert record.converged is True
        assert result.metrics.RF == pytest.approx(100.0)

    def test_single_interval(self, network_context, network_x0):
        result = _run(network_context, _config(network_context, network_x0, k_max=1))
        assert len(result.records) == 1
        assert result.metrics.D == pytest.approx(result.records[0].delta)

    def test_zero_state(self, network_context):
        ctx = network_context
        result = _run(ctx, _config(ctx, np.zeros(ctx.system.n), k_max=2))
        assert all(record.delta == pytest.approx(ctx.grid.horizon) for record in result.records)
        assert result.metrics.nu == 0.0
        assert result.metrics.mu == [0.0, 0.0]
        assert not result.final_state.any()

    def test_trajectory(self, network_context, network_x0):
        result = _run(network_context, _config(network_context, network_x0, k_max=3, record_trajectory=True))
        trajectory = result.trajectory
        assert np.all(np.diff(trajectory.times) > 0.0)
        assert trajectory.times[-1] == pytest.approx(result.metrics.sum_delta)
        assert np.allclose(trajectory.states[0], network_x0)
        assert np.allclose(trajectory.states[-1], result.final_state)
        assert trajectory.norms.shape == trajectory.times.shape

    def test_no_trajectory_by_default(self, network_context, network_x0):
        assert _run(network_context, _config(network_context, network_x0, k_max=1)).trajectory is None

    def test_scalar_sequence_matches_closed_form(self, context_factory, scalar_factory):
        """Held benchmark input on xdot = x + u: every interval has the same dwell time."""
        ctx = context_factory(scalar_factory(1.0, r=2.0), alpha=1.15, count=201)
        x0 = 1.5
        index, ratio, unit_cost = _scalar_dwell_oracle(a=1.0, q=1.0, r=2.0, alpha=1.15,
                                                       step=ctx.grid.step, count=ctx.grid.count)
        assert 0 < index < ctx.grid.count - 1

        result = _run(ctx, _config(ctx, [x0], k_max=4, force_benchmark_gain=True))

        for k, record in enumerate(result.records):
            x_k = x0 * ratio ** k
            assert record.grid_index == index
            assert record.t == pytest.approx(k * index * ctx.grid.step)
            assert record.x[0] == pytest.approx(x_k, rel=1e-8)
            assert record.interval_cost == pytest.approx(unit_cost * x_k ** 2, rel=1e-8)
        assert result.final_state[0] == pytest.approx(x0 * ratio ** 4, rel=1e-8)

    def test_states_stay_in_initial_sublevel_set(self, network_context, network_x0):
        ctx = network_context
        result = _run(ctx, _config(ctx, network_x0, k_max=10))
        radius = np.sqrt(ctx.benchmark.lyapunov_value(network_x0)
                         / np.linalg.eigvalsh(ctx.benchmark.value_tilde)[0])

        for record in result.records:
            assert record.state_norm <= radius * (1.0 + 1e-9)
        assert np.linalg.norm(result.final_state) <= radius * (1.0 + 1e-9)

    def test_lyapunov_value_never_increases(self, network_context, network_x0):
        """Two hundred intervals on the small network."""
        ctx = network_context
        result = _run(ctx, _config(ctx, network_x0, k_max=200))
        values = [record.lyapunov_value for record in result.records]
        values.append(ctx.benchmark.lyapunov_value(result.final_state))

        for k, (current, following) in enumerate(zip(values, values[1:])):
            assert following <= current * (1.0 + 1e-9), k
        assert result.metrics.fallback_count == 0

    def test_tiny_states_follow_the_same_intervals(self, network_context, network_x0):
        """With eta = 0 the loop is homogeneous: scaling x0 scales the states and keeps every interval."""
        ctx = network_context
        reference = _run(ctx, _config(ctx, network_x0, k_max=6, eta=0.0))
        tiny = _run(ctx, _config(ctx, 1e-8 * network_x0, k_max=6, eta=0.0))

        assert [r.grid_index for r in tiny.records] == [r.grid_index for r in reference.records]
        assert [r.converged for r in tiny.records] == [r.converged for r in reference.records]
        for small, large in zip(tiny.records, reference.records):
            assert np.allclose(small.F, large.F, atol=1e-7)
            assert small.interval_cost == pytest.approx(1e-16 * large.interval_cost, rel=1e-6)
        assert tiny.metrics.RF == pytest.approx(reference.metrics.RF)


class TestComputeMetrics:
    """Tests for cardinality ratios and the performance loss."""

    def _benchmark(self):
        return Benchmark(gain_tilde=np.ones((2, 2)), value_tilde=np.eye(2))

    def _grid(self):
        return TimeGrid(step=0.01, count=401)

    def test_half_count(self):
        records = [
            _record(0, [[1.0, 1.0], [0.0, 0.0]], [1.0, 1.0], 1.0, cost=0.5),
            _record(1, np.ones((2, 2)), [1.0, 1.0], 3.0, cost=0.5),
        ]
        config = RunConfig(alpha=1.2, gamma=0.0, eta=0.0, k_max=2, x0=[1.0, 1.0], grid=self._grid())

        metrics = compute_metrics(records, self._benchmark(), config, np.zeros(2))

        assert metrics.kappa == [50.0, 100.0]
        assert metrics.mu == [50.0, 100.0]
        assert metrics.RF == pytest.approx((50.0 * 1.0 + 100.0 * 3.0) / 4.0)
        assert metrics.D == pytest.approx(2.0)
        assert metrics.total_cost == pytest.approx(1.0)
        assert metrics.benchmark_cost == pytest.approx(2.0)
        assert metrics.nu == pytest.approx(-0.5)
        assert metrics.truncation_tolerance == 0.0

    def test_inputs_denominator(self):
        records = [_record(0, [[1.0, 1.0], [0.0, 0.0]], [1.0, 1.0], 1.0)]
        config = RunConfig(alpha=1.2, gamma=0.0, eta=0.0, k_max=1, x0=[1.0, 1.0], grid=self._grid(),
                           mu_denominator=MuDenominator.INPUTS)
        assert compute_metrics(records, self._benchmark(), config, np.zeros(2)).mu == [50.0]

    def test_tail_uses_final_state(self):
        records = [_record(0, np.ones((2, 2)), [1.0, 0.0], 1.0, cost=0.25)]
        config = RunConfig(alpha=1.5, gamma=0.0, eta=0.0, k_max=1, x0=[1.0, 0.0], grid=self._grid())
        metrics = compute_metrics(records, self._benchmark(), config, np.array([0.5, 0.0]))
        assert metrics.truncation_tolerance == pytest.approx(1.5 * 0.25)
        assert metrics.total_cost == pytest.approx(0.25 + 1.5 * 0.25)

    def test_threshold_counts_tiny_entries_as_zero(self):
        records = [_record(0, [[1.0, 1e-9], [1e-9, 1.0]], [1.0, 1.0], 1.0)]
        config = RunConfig(alpha=1.2, gamma=0.0, eta=0.0, k_max=1, x0=[1.0, 1.0], grid=self._grid())
        assert compute_metrics(records, self._benchmark(), config, np.zeros(2)).kappa == [50.0]

    def test_empty_records(self):
        config = RunConfig(alpha=1.2, gamma=0.0, eta=0.0, k_max=1, x0=[1.0, 1.0], grid=self._grid())
        with pytest.raises(InputError):
            compute_metrics([], self._benchmark(), config, np.zeros(2))

    def test_serialized_keys(self):
        records = [_record(0, np.ones((2, 2)), [1.0, 1.0], 1.0)]
        config = RunConfig(alpha=1.2, gamma=0.0, eta=0.0, k_max=1, x0=[1.0, 1.0], grid=self._grid())
        payload = compute_metrics(records, self._benchmark(), config, np.zeros(2)).to_dict()
        assert {"kappa", "mu", "RF", "RU", "D", "nu", "truncationTolerance"} <= set(payload)


class TestBenchmarkRun:
    """Tests for the continuous LQR comparison run."""

    def test_scalar_cost(self, scalar_factory):
        system = scalar_factory(-1.0, r=2.0)
        benchmark = build_benchmark(system)
        f = benchmark.gain_tilde[0, 0]
        x0 = 3.0

        run = benchmark_run(system, benchmark, np.array([x0]), horizon=40.0)

        expected = (1.0 + 2.0 * f ** 2) * x0 ** 2 / (2.0 * abs(-1.0 + f))
        assert run.cost == pytest.approx(expected, rel=1e-6)
        assert run.cost == pytest.approx(benchmark.benchmark_cost(np.array([x0])), rel=1e-6)
        assert run.norms[0] == pytest.approx(x0)
        assert run.times[-1] == pytest.approx(40.0)

    def test_invalid_horizon(self, stable_scalar_context):
        with pytest.raises(InputError):
            benchmark_run(stable_scalar_context.system, stable_scalar_context.benchmark,
                          np.array([1.0]), horizon=0.0)

    def test_table_free(self, small_network_spec):
        system = generate_network(small_network_spec)
        benchmark = build_benchmark(system)
        x0 = np.ones(system.n)
        run = benchmark_run(system, benchmark, x0, horizon=80.0)
        assert run.cost == pytest.approx(benchmark.benchmark_cost(x0), rel=1e-3)
        assert run.states.shape == (8001, system.n)
