"""
Plot-ready long-format tables (series, x, y), one CSV per figure id.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger

from src.core.exceptions import MissingInputsError
from src.services.export_service import result_export_service

PLOT_COLUMNS = ["series", "x", "y"]

# parameter -> [(figure id, sweep column)]
SWEEP_FIGURES = {
    "beta": [("fig6a", "meanRF"), ("fig6b", "meanRU"), ("fig7", "meanD")],
    "gamma": [("fig8a", "meanRF")],
    "eta": [("fig8b", "meanRU")],
}


@dataclass
class PlotDataReport:
    """Figures written and inputs that were skipped."""
    written: Dict[str, Path] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)


class PlotDataService:
    """Builds figure tables from run and sweep result directories."""

    def __init__(self):
        self.exporter = result_export_service

    @staticmethod
    def _depth_sorted(paths: List[Path]) -> List[Path]:
        return sorted(paths, key=lambda p: (len(p.parts), str(p)))

    def discover(self, results_dir: Path):
        """Shallowest run directory and every sweep.csv below results_dir."""
        runs = self._depth_sorted([p.parent for p in results_dir.rglob("records.csv")])
        sweeps = self._depth_sorted(list(results_dir.rglob("sweep.csv")))
        return (runs[0] if runs else None), sweeps

    def emit(self, results_dir: Path, out_dir: Optional[Path] = None) -> PlotDataReport:
        """
        Write figN.csv files for everything found under results_dir.

        Raises:
            MissingInputsError: neither records.csv nor sweep.csv exists.
        """
        results_dir = Path(results_dir)
        if not results_dir.is_dir():
            raise MissingInputsError([str(results_dir)])
        run_dir, sweeps = self.discover(results_dir)
        if run_dir is None and not sweeps:
            raise MissingInputsError(["records.csv", "sweep.csv"])

        out_dir = Path(out_dir) if out_dir is not None else results_dir / "plots"
        figures: Dict[str, List[dict]] = {}
        report = PlotDataReport()

        if run_dir is not None:
            self._run_figures(run_dir, figures, report)
        for sweep_path in sweeps:
            self._sweep_figures(results_dir, sweep_path, figures, report)

        for figure_id, rows in figures.items():
            if figure_id == "table1":
                continue
            report.written[figure_id] = self.exporter.export_to_csv(
                rows, out_dir / f"{figure_id}.csv", PLOT_COLUMNS
            ).path
        if "table1" in figures:
            rows = figures["table1"]
            report.written["table1"] = self.exporter.export_to_csv(
                rows, out_dir / "table1.csv", list(rows[0].keys()) if rows else None
            ).path

        logger.info(f"Wrote {len(report.written)} plot tables to {out_dir}")
        return report

    def _run_figures(self, run_dir: Path, figures: Dict[str, List[dict]], report: PlotDataReport):
        records = self.exporter.read_csv(run_dir / "records.csv")
        times = [float(r["t_k"]) for r in records]

        figures["fig2a"] = [{"series": "kappa", "x": t, "y": float(r["kappa_k"])} for t, r in zip(times, records)]
        figures["fig2b"] = [{"series": "mu", "x": t, "y": float(r["mu_k"])} for t, r in zip(times, records)]
        figures["fig5"] = [{"series": "delta", "x": t, "y": float(r["delta_k"])} for t, r in zip(times, records)]

        fig3 = [{"series": "lyapunov", "x": t, "y": float(r["lyapunovValue"])} for t, r in zip(times, records)]
        running = 0.0
        for t, r in zip(times, records):
            fig3.append({"series": "cumulativeCost", "x": t, "y": running})
            running += float(r["intervalCost"])
        figures["fig3"] = fig3

        layout = run_dir / "layout.csv"
        if layout.exists():
            figures["fig1"] = [
                {"series": r["kind"], "x": float(r["x"]), "y": float(r["y"])}
                for r in self.exporter.read_csv(layout)
            ]
        else:
            report.skipped.append("fig1")

        trajectory = run_dir / "trajectory.csv"
        benchmark = run_dir / "benchmark.csv"
        if trajectory.exists():
            rows = self.exporter.read_csv(trajectory)
            components = [c for c in (rows[0].keys() if rows else []) if c not in ("t", "norm")]
            figures["fig4b"] = [
                {"series": c, "x": float(r["t"]), "y": float(r[c])} for c in components for r in rows
            ]
            fig4a = [{"series": "selfTriggered", "x": float(r["t"]), "y": float(r["norm"])} for r in rows]
            if benchmark.exists():
                fig4a += [
                    {"series": "periodicLqr", "x": float(r["t"]), "y": float(r["norm"])}
                    for r in self.exporter.read_csv(benchmark)
                ]
            figures["fig4a"] = fig4a
        else:
            report.skipped.extend(["fig4a", "fig4b"])

    def _sweep_figures(self, results_dir: Path, sweep_path: Path,
                       figures: Dict[str, List[dict]], report: PlotDataReport):
        rows = self.exporter.read_csv(sweep_path)
        if not rows:
            report.skipped.append(str(sweep_path.relative_to(results_dir)))
            return
        parameter = rows[0]["parameter"]
        if parameter == "alpha":
            figures.setdefault("table1", []).extend(rows)
            return
        label = sweep_path.parent.relative_to(results_dir).as_posix()
        for figure_id, column in SWEEP_FIGURES.get(parameter, []):
            series = column if label == "." else f"{column}:{label}"
            figures.setdefault(figure_id, []).extend(
                {"series": series, "x": float(r["value"]), "y": float(r[column])} for r in rows
            )


# Global instance
plot_data_service = PlotDataService()


def emit_plot_data(results_dir: Path, out_dir: Optional[Path] = None) -> PlotDataReport:
    return plot_data_service.emit(results_dir, out_dir)
