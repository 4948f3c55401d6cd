"""
Command Line Interface for the self-triggered sparse control toolkit.
"""
import json
import os
import sys
from dataclasses import dataclass
from functools import wraps
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

# Add src to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config.settings import settings
from src.core.exceptions import ConfigError, OutputError, StcException
from src.schemas.experiment import ExperimentConfig
from src.utils.logger import logger, setup_logging

console = Console()
err_console = Console(stderr=True)


@dataclass
class CliState:
    config_path: Optional[str]
    out_dir: Optional[str]
    seed: Optional[int]
    raw: bool


def _line_of_key(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def load_config(path: Optional[str]) -> ExperimentConfig:
    """
    Parse and validate an experiment config; defaults when path is None.

    Raises:
        ConfigError: unreadable file, malformed JSON or failed validation,
            with the offending line when it can be located.
    """
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON: {e.msg}", line=e.lineno) from e
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        keys = [part for part in error["loc"] if isinstance(part, str)]
        location = ".".join(str(part) for part in error["loc"]) or "config"
        line = None
        for key in reversed(keys):
            line = _line_of_key(text, key)
            if line is not None:
                break
        raise ConfigError(f"{location}: {error['msg']}", line=line) from e

    if config.system_file is not None and not os.path.isabs(config.system_file):
        resolved = Path(path).resolve().parent / config.system_file
        config = config.model_copy(update={"system_file": str(resolved)})
    return config


def handle_errors(f):
    """Map toolkit exceptions to their exit codes."""
    @wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except StcException as e:
            logger.debug(f"{e.error_code}: {e.details}")
            err_console.print(f"[bold red]Error ({e.error_code}): {escape(e.message)}[/]")
            sys.exit(e.exit_code)
        except OSError as e:
            wrapped = OutputError(str(e))
            err_console.print(f"[bold red]Error ({wrapped.error_code}): {escape(wrapped.message)}[/]")
            sys.exit(wrapped.exit_code)
    return wrapper


def _out_dir(state: CliState, config: ExperimentConfig) -> Path:
    return Path(state.out_dir or config.output.directory)


@click.group()
@click.version_option(version=settings.app_version, prog_name=settings.app_name)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Experiment config (JSON)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (overrides output.directory)")
@click.option("--seed", type=int, default=None, help="Base seed (overrides network.seed)")
@click.option("--raw", is_flag=True, help="Also write per-seed sweep rows and run directories")
@click.option("--log-level", default=None, help="Log level (default from STC_LOG_LEVEL)")
@click.pass_context
def cli(ctx: click.Context, config_path, out_dir, seed, raw, log_level):
    """Self-triggered sparse optimal control experiments."""
    setup_logging(level=log_level)
    ctx.obj = CliState(config_path=config_path, out_dir=out_dir, seed=seed, raw=raw)


# ============ Run Commands ============

@cli.command("run")
@click.pass_obj
@handle_errors
def run_command(state: CliState):
    """Run the self-triggered loop once and write records, metrics and trajectories."""
    from src.services.experiment_service import run_single

    config = load_config(state.config_path)
    out = _out_dir(state, config)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console
    ) as progress:
        progress.add_task(description="Running self-triggered control...", total=None)
        result = run_single(config, out, state.seed)

    metrics = result.metrics
    table = Table(title="Run metrics")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("intervals", str(len(result.records)))
    table.add_row("R_F (%)", f"{metrics.RF:.2f}")
    table.add_row("R_u (%)", f"{metrics.RU:.2f}")
    table.add_row("D", f"{metrics.D:.4f}")
    table.add_row("nu", f"{metrics.nu:.4f}")
    table.add_row("truncation tolerance", f"{metrics.truncation_tolerance:.3e}")
    table.add_row("fallbacks", str(metrics.fallback_count))
    table.add_row("non-converged", str(metrics.nonconverged_count))
    console.print(table)
    console.print(f"[bold green]✓ Results written to {out}[/]")


@cli.command("sweep")
@click.pass_obj
@handle_errors
def sweep_command(state: CliState):
    """Sweep alpha, beta, gamma or eta over several seeds and write sweep.csv."""
    from src.services.experiment_service import run_sweep, sweep_tasks, effective_seed

    config = load_config(state.config_path)
    if config.sweep is None:
        raise ConfigError("The config has no sweep section")
    out = _out_dir(state, config)
    total = len(sweep_tasks(config, effective_seed(config, state.seed)))

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console
    ) as progress:
        task = progress.add_task(description=f"Sweeping {config.sweep.parameter}...", total=total)
        rows = run_sweep(config, out, state.seed, raw=state.raw,
                         on_result=lambda _row: progress.advance(task))

    table = Table(title=f"Sweep over {config.sweep.parameter}")
    for column in ("value", "mean R_F", "mean R_u", "mean D", "mean nu", "runs"):
        table.add_column(column, style="cyan" if column == "value" else None)
    for row in rows:
        table.add_row(f"{row.value:g}", f"{row.mean_r_f:.2f}", f"{row.mean_r_u:.2f}",
                      f"{row.mean_d:.4f}", f"{row.mean_nu:.4f}", str(row.run_count))
    console.print(table)
    console.print(f"[bold green]✓ Sweep written to {out / 'sweep.csv'}[/]")


# ============ Output Commands ============

@cli.command("plotdata")
@click.option("--results", "results_dir", type=click.Path(file_okay=False), default=None,
              help="Results directory (default: --out or output.directory)")
@click.pass_obj
@handle_errors
def plotdata_command(state: CliState, results_dir: Optional[str]):
    """Write one (series, x, y) CSV per figure from existing results."""
    from src.report.plot_data import emit_plot_data

    if results_dir is None:
        results_dir = _out_dir(state, load_config(state.config_path))
    report = emit_plot_data(Path(results_dir))

    table = Table(title="Plot tables")
    table.add_column("Figure", style="cyan")
    table.add_column("File", style="green")
    for figure_id, path in sorted(report.written.items()):
        table.add_row(figure_id, str(path))
    console.print(table)
    if report.skipped:
        console.print(f"[bold yellow]Skipped (inputs absent): {', '.join(report.skipped)}[/]")


@cli.command("gen-network")
@click.pass_obj
@handle_errors
def gen_network_command(state: CliState):
    """Generate the network plant and write system.json and layout.csv."""
    from src.services.experiment_service import effective_seed
    from src.services.export_service import result_export_service
    from src.services.plant_service import network_from_layout, place_nodes, save_system

    config = load_config(state.config_path)
    if config.network is None:
        raise ConfigError("gen-network needs a network section")
    spec = config.network.model_copy(update={"seed": effective_seed(config, state.seed)})
    out = _out_dir(state, config)

    layout = place_nodes(spec)
    system = network_from_layout(layout, spec.decay_rate, spec.state_weight, spec.input_weight)
    save_system(system, str(out / "system.json"))
    layout_file = result_export_service.export_to_csv(
        [{"node": i, "x": p[0], "y": p[1], "kind": kind}
         for i, (p, kind) in enumerate(zip(layout.positions, layout.kinds))],
        out / "layout.csv", ["node", "x", "y", "kind"]
    )

    squares = sum(1 for kind in layout.kinds if kind == "square")
    console.print(Panel.fit(
        f"[bold green]Network generated[/]\n"
        f"nodes: {spec.subsystem_count} ({squares} unstable)\n"
        f"states: {system.n}, inputs: {system.m}\n"
        f"beta: {spec.decay_rate}, seed: {spec.seed}\n"
        f"layout: {layout_file.path}",
        title="gen-network"
    ))


# ============ Main Entry ============

def main():
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()
