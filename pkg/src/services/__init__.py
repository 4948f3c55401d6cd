"""Services package - table, plant, trigger, gain, engine and experiment logic."""
from src.services.table_service import build_table, TableCache, read_table, write_table
from src.services.plant_service import (
    NodeLayout, place_nodes, generate_network, network_from_layout, build_benchmark,
    propagate, transition_matrix, sample_interval, interval_cost, interval_costs,
    system_to_document, system_from_document, load_system, save_system
)
from src.services.trigger_service import eval_g, constraint_profile, inter_exec
from src.services.gain_service import (
    build_constraint, constraint_value, schur_lmi_matrix, schur_lmi_holds,
    matrix_inequality_lhs, gain_lmi_matrix, check_strict_feasibility_lmi,
    objective_value, BarrierOptions, feedback_gain
)
from src.services.engine_service import run_algorithm, compute_metrics, benchmark_run, BenchmarkRun
from src.services.export_service import ResultExportService, ExportFormat, result_export_service

__all__ = [
    "build_table", "TableCache", "read_table", "write_table",
    "NodeLayout", "place_nodes", "generate_network", "network_from_layout", "build_benchmark",
    "propagate", "transition_matrix", "sample_interval", "interval_cost", "interval_costs",
    "system_to_document", "system_from_document", "load_system", "save_system",
    "eval_g", "constraint_profile", "inter_exec",
    "build_constraint", "constraint_value", "schur_lmi_matrix", "schur_lmi_holds",
    "matrix_inequality_lhs", "gain_lmi_matrix", "check_strict_feasibility_lmi",
    "objective_value", "BarrierOptions", "feedback_gain",
    "run_algorithm", "compute_metrics", "benchmark_run", "BenchmarkRun",
    "ResultExportService", "ExportFormat", "result_export_service",
]
