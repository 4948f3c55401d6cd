"""
Engine service - the self-triggered sparse control loop, run metrics and the
continuous LQR comparison run.

Each interval: dwell time at the benchmark gain, sparse gain at that dwell
time, then the dwell time re-computed for the new gain.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from loguru import logger
from scipy.integrate import simpson

from src.core.exceptions import BoundViolationError, GridTooCoarseError, InputError
from src.core.linalg import expm
from src.models.run import (
    DesignContext, MuDenominator, RunConfig, RunMetrics, RunResult, Trajectory, TriggerRecord
)
from src.models.system import Benchmark, LtiSystem
from src.models.table import IntegralTable
from src.services.gain_service import BarrierOptions, build_constraint, feedback_gain
from src.services.plant_service import interval_cost, propagate, sample_interval, transition_matrix
from src.services.trigger_service import inter_exec

DECREASE_TOL = 1e-8
TOTAL_TOL = 1e-6


@dataclass
class BenchmarkRun:
    """Continuous u = F~ x run on a uniform grid."""
    cost: float
    times: np.ndarray
    states: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def default_zero_threshold(benchmark: Benchmark) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(benchmark.gain_tilde), initial=0.0)))


def _count_nonzero(values: np.ndarray, threshold: float) -> int:
    return int(np.count_nonzero(np.abs(values) > threshold))


def run_algorithm(system: LtiSystem, benchmark: Benchmark, table: IntegralTable, config: RunConfig,
                  options: Optional[BarrierOptions] = None) -> RunResult:
    """
    Run k_max trigger intervals from config.x0.

    Raises:
        GridTooCoarseError: the benchmark gain admits no positive dwell time.
        BoundViolationError: the per-interval decrease or the total cost bound fails.
    """
    ctx = DesignContext(system=system, benchmark=benchmark, table=table, alpha=config.alpha)
    if config.grid != table.grid:
        raise InputError("Run grid and table grid differ",
                         {"run": [config.grid.step, config.grid.count],
                          "table": [table.grid.step, table.grid.count]})
    x = system.check_state(config.x0)
    gain_tilde = np.array(benchmark.gain_tilde)
    step = table.grid.step

    logger.info(f"Run start: n={system.n} m={system.m} alpha={config.alpha} gamma={config.gamma} "
                f"eta={config.eta} kMax={config.k_max}")

    records: List[TriggerRecord] = []
    transition = np.eye(system.n)
    elapsed_index = 0
    times: List[np.ndarray] = []
    states: List[np.ndarray] = []

    for k in range(config.k_max):
        value_k = benchmark.lyapunov_value(x)
        state_norm = float(np.linalg.norm(x))

        first = inter_exec(ctx, gain_tilde, x)
        if first.grid_index == 0 and state_norm > 0.0:
            raise GridTooCoarseError(details={"k": k, "step": step})

        gain, result, converged, fallback = gain_tilde, first, True, False
        if not config.force_benchmark_gain:
            data = build_constraint(ctx, x, first.grid_index) if state_norm > 0.0 else None
            solution = feedback_gain(ctx, data, x, config.gamma, config.eta, options)
            converged = solution.converged
            corrected = inter_exec(ctx, solution.F, x)
            if corrected.grid_index == 0:
                logger.info(f"Interval {k}: corrected dwell time is zero, falling back to the benchmark gain")
                fallback = True
            else:
                gain, result = solution.F, corrected

        index = result.grid_index
        cost = interval_cost(table, gain, x, index)
        x_next = propagate(system, table, gain, x, index)
        value_next = benchmark.lyapunov_value(x_next)

        # tolerance scales with ||x||^2
        if cost > config.alpha * (value_k - value_next) + DECREASE_TOL * (state_norm ** 2 + value_k):
            logger.error(f"Interval {k}: cost {cost:.6e} exceeds the scaled Lyapunov decrease")
            raise BoundViolationError("Per-interval cost exceeds the scaled Lyapunov decrease",
                                      {"k": k, "cost": cost, "decrease": value_k - value_next})

        if config.record_trajectory:
            samples = sample_interval(system, table, gain, x, index)
            times.append((elapsed_index + np.arange(index)) * step)
            states.append(samples[:-1])

        records.append(TriggerRecord(
            k=k,
            t=elapsed_index * step,
            delta=result.delta,
            grid_index=index,
            F=np.array(gain),
            x=x.copy(),
            u=gain @ x,
            interval_cost=cost,
            converged=converged,
            fallback=fallback,
            lyapunov_value=value_k,
            state_norm=state_norm,
        ))
        logger.debug(f"Interval {k}: t={elapsed_index * step:.4f} delta={result.delta:.4f} "
                     f"cost={cost:.6e} V={value_k:.6e} converged={converged}")

        transition = transition_matrix(system, table, gain, index) @ transition
        elapsed_index += index
        x = x_next

    trajectory = None
    if config.record_trajectory:
        times.append(np.array([elapsed_index * step]))
        states.append(x.reshape(1, -1))
        trajectory = Trajectory(times=np.concatenate(times), states=np.vstack(states))

    metrics = compute_metrics(records, benchmark, config, x)
    limit = config.alpha * metrics.benchmark_cost * (1.0 + TOTAL_TOL) + 1e-9 * config.k_max
    if metrics.total_cost > limit:
        logger.error(f"Total cost {metrics.total_cost:.6e} exceeds alpha times the benchmark cost")
        raise BoundViolationError("Total cost exceeds alpha times the benchmark cost",
                                  {"totalCost": metrics.total_cost, "limit": limit})

    logger.info(f"Run finished: RF={metrics.RF:.2f}% RU={metrics.RU:.2f}% D={metrics.D:.4f} nu={metrics.nu:.4f}")
    return RunResult(
        records=records,
        metrics=metrics,
        final_state=x,
        transition=transition,
        trajectory=trajectory,
    )


def compute_metrics(records: List[TriggerRecord], benchmark: Benchmark, config: RunConfig,
                    final_state: np.ndarray) -> RunMetrics:
    """Cardinality ratios, their time-weighted averages, mean dwell time and performance loss."""
    if not records:
        raise InputError("Metrics need at least one record")
    threshold = config.zero_threshold if config.zero_threshold is not None \
        else default_zero_threshold(benchmark)
    gain_tilde = benchmark.gain_tilde
    gain_count = _count_nonzero(gain_tilde, threshold)
    m = gain_tilde.shape[0]

    kappa: List[float] = []
    mu: List[float] = []
    for record in records:
        kappa.append(100.0 * _count_nonzero(record.F, threshold) / gain_count if gain_count else 0.0)
        # inputs scale with the state, so their threshold does too
        input_threshold = threshold * record.state_norm
        if config.mu_denominator == MuDenominator.INPUTS:
            reference = m
        else:
            reference = _count_nonzero(gain_tilde @ record.x, input_threshold)
        if reference == 0 or record.state_norm == 0.0:
            mu.append(0.0)
        else:
            mu.append(100.0 * _count_nonzero(record.u, input_threshold) / reference)

    deltas = np.array([record.delta for record in records])
    sum_delta = float(deltas.sum())
    if sum_delta > 0.0:
        rf = float(deltas @ np.array(kappa) / sum_delta)
        ru = float(deltas @ np.array(mu) / sum_delta)
    else:
        rf, ru = float(np.mean(kappa)), float(np.mean(mu))

    tail = config.alpha * benchmark.lyapunov_value(final_state)
    total = float(sum(record.interval_cost for record in records)) + tail
    reference_cost = benchmark.lyapunov_value(records[0].x)
    nu = (total - reference_cost) / reference_cost if reference_cost > 0.0 else 0.0

    return RunMetrics(
        kappa=kappa,
        mu=mu,
        RF=rf,
        RU=ru,
        D=sum_delta / config.k_max,
        total_cost=total,
        benchmark_cost=reference_cost,
        nu=nu,
        truncation_tolerance=tail,
        zero_threshold=threshold,
        sum_delta=sum_delta,
        fallback_count=sum(1 for record in records if record.fallback),
        nonconverged_count=sum(1 for record in records if not record.converged),
    )


def benchmark_run(system: LtiSystem, benchmark: Benchmark, x0: np.ndarray, horizon: float,
                  step: float = 0.01) -> BenchmarkRun:
    """
    Continuous-time run under u = F~ x by exact matrix-exponential steps;
    cost by Simpson quadrature of x^T (Q + F~^T R F~) x.
    """
    if horizon <= 0 or step <= 0:
        raise InputError("Horizon and step must be positive", {"horizon": horizon, "step": step})
    x0 = system.check_state(x0)
    gain = benchmark.gain_tilde
    count = int(np.ceil(horizon / step - 1e-9)) + 1
    times = np.arange(count) * step
    flow = expm(system.A + system.B @ gain, step)

    states = np.empty((count, system.n))
    states[0] = x0
    for i in range(1, count):
        states[i] = flow @ states[i - 1]

    weight = system.Q + gain.T @ system.R @ gain
    integrand = np.einsum("ki,ij,kj->k", states, weight, states)
    cost = float(simpson(integrand, x=times))
    return BenchmarkRun(cost=cost, times=times, states=states)
