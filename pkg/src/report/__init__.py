"""Report package - plot-ready figure tables."""
from src.report.plot_data import (
    PlotDataReport, PlotDataService, plot_data_service, emit_plot_data
)

__all__ = [
    "PlotDataReport", "PlotDataService", "plot_data_service", "emit_plot_data"
]
