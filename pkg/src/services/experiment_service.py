"""
Experiment service - turns an ExperimentConfig into runs and result files.

Single runs write records.csv, metrics.json, trajectory.csv, benchmark.csv
and (for generated networks) layout.csv into one directory. Sweeps fan out
over (value, seed) pairs with joblib and aggregate sweep.csv in the parent.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from src.config.settings import settings
from src.core.exceptions import InputError
from src.models.run import RunConfig, RunResult
from src.models.system import Benchmark, LtiSystem
from src.models.table import IntegralTable, TimeGrid
from src.schemas.experiment import ExperimentConfig
from src.schemas.results import MetricsDocument, SweepRawRow, SweepRow
from src.services.engine_service import benchmark_run, default_zero_threshold, run_algorithm
from src.services.export_service import ExportResult, result_export_service
from src.services.plant_service import (
    NodeLayout, build_benchmark, load_system, network_from_layout, place_nodes
)
from src.services.table_service import TableCache

RECORD_COLUMNS = [
    "k", "t_k", "delta_k", "kappa_k", "mu_k", "intervalCost",
    "converged", "fallback", "lyapunovValue", "stateNorm",
]
SWEEP_COLUMNS = ["parameter", "value", "meanRF", "meanRU", "meanD", "meanNu", "runCount"]
SWEEP_RAW_COLUMNS = ["parameter", "value", "seed", "RF", "RU", "D", "nu", "fallbackCount", "nonconvergedCount"]


@dataclass
class PreparedRun:
    """Everything needed to call run_algorithm for one seed."""
    system: LtiSystem
    benchmark: Benchmark
    table: IntegralTable
    run_config: RunConfig
    layout: Optional[NodeLayout]
    seed: int


def effective_seed(config: ExperimentConfig, seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return config.network.seed if config.network is not None else 0


def prepare_run(config: ExperimentConfig, seed: int, cache: Optional[TableCache] = None) -> PreparedRun:
    """Build plant, benchmark, table and run parameters for one seed."""
    layout = None
    if config.network is not None:
        spec = config.network.model_copy(update={"seed": seed})
        layout = place_nodes(spec)
        system = network_from_layout(layout, spec.decay_rate, spec.state_weight, spec.input_weight)
    else:
        system = load_system(config.system_file)

    benchmark = build_benchmark(system)
    run = config.run
    grid = TimeGrid.from_horizon(run.grid_step_seconds, run.horizon_seconds)
    cache = cache if cache is not None else TableCache()
    table = cache.get_or_build(system, grid)

    if run.initial_state is not None:
        x0 = np.array(run.initial_state, dtype=float)
        if x0.size != system.n:
            raise InputError("initialState does not match the system dimension",
                             {"n": system.n, "size": int(x0.size)})
    else:
        x0 = np.random.default_rng(seed + 1).standard_normal(system.n)

    run_config = RunConfig(
        alpha=run.alpha,
        gamma=run.gamma,
        eta=run.eta,
        k_max=run.k_max,
        x0=x0,
        grid=grid,
        tail_horizon=run.tail_horizon_seconds,
        zero_threshold=run.zero_threshold,
        mu_denominator=run.mu_denominator,
        force_benchmark_gain=run.force_benchmark_gain,
        record_trajectory=run.record_trajectory,
    )
    return PreparedRun(system, benchmark, table, run_config, layout, seed)


def execute(prepared: PreparedRun) -> RunResult:
    return run_algorithm(prepared.system, prepared.benchmark, prepared.table, prepared.run_config)


def write_run(config: ExperimentConfig, prepared: PreparedRun, result: RunResult,
              out_dir: Path) -> List[ExportResult]:
    """Write the per-run result files into out_dir; one ExportResult per file."""
    out_dir = Path(out_dir)
    exporter = result_export_service
    written: List[ExportResult] = []
    metrics = result.metrics

    rows = [
        {
            "k": r.k,
            "t_k": r.t,
            "delta_k": r.delta,
            "kappa_k": metrics.kappa[i],
            "mu_k": metrics.mu[i],
            "intervalCost": r.interval_cost,
            "converged": r.converged,
            "fallback": r.fallback,
            "lyapunovValue": r.lyapunov_value,
            "stateNorm": r.state_norm,
        }
        for i, r in enumerate(result.records)
    ]
    written.append(exporter.export_to_csv(rows, out_dir / "records.csv", RECORD_COLUMNS))

    n = prepared.system.n
    state_columns = [f"x{i + 1}" for i in range(n)]
    if result.trajectory is not None and config.output.write_trajectory:
        trajectory = result.trajectory
        traj_rows = []
        for t, state, norm in zip(trajectory.times, trajectory.states, trajectory.norms):
            row = {"t": t, "norm": norm}
            row.update(zip(state_columns, state))
            traj_rows.append(row)
        written.append(exporter.export_to_csv(traj_rows, out_dir / "trajectory.csv",
                                              ["t", *state_columns, "norm"]))

    extras: Dict[str, float] = {}
    if config.output.write_benchmark:
        comparison = benchmark_run(prepared.system, prepared.benchmark, prepared.run_config.x0,
                                   prepared.run_config.tail_horizon, prepared.table.grid.step)
        extras["benchmarkRunCost"] = comparison.cost
        written.append(exporter.export_to_csv(
            [{"t": t, "norm": norm} for t, norm in zip(comparison.times, comparison.norms)],
            out_dir / "benchmark.csv", ["t", "norm"]
        ))

    if prepared.layout is not None:
        written.append(exporter.export_to_csv(
            [{"node": i, "x": p[0], "y": p[1], "kind": kind}
             for i, (p, kind) in enumerate(zip(prepared.layout.positions, prepared.layout.kinds))],
            out_dir / "layout.csv", ["node", "x", "y", "kind"]
        ))

    threshold = default_zero_threshold(prepared.benchmark) if prepared.run_config.zero_threshold is None \
        else prepared.run_config.zero_threshold
    document = MetricsDocument(
        metrics={**metrics.to_dict(), **extras},
        config=config.model_dump(by_alias=True, mode="json"),
        seed=prepared.seed,
        state_dimension=n,
        input_dimension=prepared.system.m,
        benchmark_gain_nonzeros=int(np.count_nonzero(np.abs(prepared.benchmark.gain_tilde) > threshold)),
        final_state_norm=float(np.linalg.norm(result.final_state)),
        initial_state=prepared.run_config.x0.tolist(),
    )
    written.append(exporter.export_to_json(document.model_dump(by_alias=True), out_dir / "metrics.json"))
    logger.info(f"Wrote {len(written)} files to {out_dir}: "
                f"{', '.join(item.path.name for item in written)}")
    return written


def run_single(config: ExperimentConfig, out_dir: Path, seed: Optional[int] = None) -> RunResult:
    seed = effective_seed(config, seed)
    prepared = prepare_run(config, seed)
    result = execute(prepared)
    write_run(config, prepared, result, out_dir)
    return result


def apply_sweep_value(config: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    """Copy of config with one swept parameter replaced."""
    if parameter == "beta":
        network = config.network.model_copy(update={"decay_rate": value})
        return config.model_copy(update={"network": network})
    run = config.run.model_copy(update={parameter: value})
    return config.model_copy(update={"run": run})


def _sweep_task(config: ExperimentConfig, parameter: str, value: float, seed: int,
                run_dir: Optional[Path]) -> SweepRawRow:
    point = apply_sweep_value(config, parameter, value)
    if run_dir is None:
        point = point.model_copy(update={"run": point.run.model_copy(update={"record_trajectory": False})})
    prepared = prepare_run(point, seed)
    result = execute(prepared)
    if run_dir is not None:
        write_run(point, prepared, result, run_dir)
    metrics = result.metrics
    return SweepRawRow(
        parameter=parameter,
        value=value,
        seed=seed,
        RF=metrics.RF,
        RU=metrics.RU,
        D=metrics.D,
        nu=metrics.nu,
        fallback_count=metrics.fallback_count,
        nonconverged_count=metrics.nonconverged_count,
    )


def sweep_tasks(config: ExperimentConfig, seed: int) -> List[Tuple[float, int]]:
    sweep = config.sweep
    return [(value, seed + j) for value in sweep.values for j in range(sweep.seeds_per_point)]


def aggregate(raw: Iterable[SweepRawRow], values: List[float], parameter: str) -> List[SweepRow]:
    """One row per sweep value; means over its seeds."""
    grouped: Dict[float, List[SweepRawRow]] = {value: [] for value in values}
    for row in raw:
        grouped[row.value].append(row)
    table = []
    for value in values:
        rows = grouped[value]
        table.append(SweepRow(
            parameter=parameter,
            value=value,
            meanRF=float(np.mean([r.r_f for r in rows])),
            meanRU=float(np.mean([r.r_u for r in rows])),
            meanD=float(np.mean([r.d for r in rows])),
            meanNu=float(np.mean([r.nu for r in rows])),
            run_count=len(rows),
        ))
    return table


def run_sweep(
    config: ExperimentConfig,
    out_dir: Path,
    seed: Optional[int] = None,
    raw: bool = False,
    threads: Optional[int] = None,
    on_result: Optional[Callable[[SweepRawRow], None]] = None
) -> List[SweepRow]:
    """Run every (value, seed) pair and write sweep.csv (and sweep_raw.csv with raw)."""
    if config.sweep is None:
        raise InputError("Configuration has no sweep section")
    seed = effective_seed(config, seed)
    out_dir = Path(out_dir)
    parameter = config.sweep.parameter
    threads = threads or settings.threads
    tasks = sweep_tasks(config, seed)
    logger.info(f"Sweep over {parameter}: {len(config.sweep.values)} values x "
                f"{config.sweep.seeds_per_point} seeds on {threads} worker(s)")

    def run_dir(value: float, task_seed: int) -> Optional[Path]:
        if not (raw or config.output.raw):
            return None
        return out_dir / "runs" / f"{parameter}={value:g}" / f"seed={task_seed}"

    jobs = (delayed(_sweep_task)(config, parameter, value, task_seed, run_dir(value, task_seed))
            for value, task_seed in tasks)
    raw_rows: List[SweepRawRow] = []
    for row in Parallel(n_jobs=threads, return_as="generator")(jobs):
        raw_rows.append(row)
        if on_result is not None:
            on_result(row)

    table = aggregate(raw_rows, config.sweep.values, parameter)
    summary = result_export_service.export_to_csv(
        [row.model_dump(by_alias=True) for row in table], out_dir / "sweep.csv", SWEEP_COLUMNS
    )
    logger.info(f"Sweep over {parameter}: {summary.record_count} rows in {summary.path}")
    if raw or config.output.raw:
        raw_export = result_export_service.export_to_csv(
            [row.model_dump(by_alias=True) for row in raw_rows], out_dir / "sweep_raw.csv", SWEEP_RAW_COLUMNS
        )
        logger.info(f"Sweep over {parameter}: {raw_export.record_count} raw rows in {raw_export.path}")
    return table
