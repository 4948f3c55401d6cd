"""Domain models package."""
from src.models.system import LtiSystem, Benchmark
from src.models.table import TimeGrid, IntegralTable, TableSlice
from src.models.run import (
    DesignContext, ConstraintEval, InterExecResult, ConstraintData, GainSolution,
    MuDenominator, RunConfig, TriggerRecord, RunMetrics, Trajectory, RunResult
)

__all__ = [
    "LtiSystem", "Benchmark",
    "TimeGrid", "IntegralTable", "TableSlice",
    "DesignContext", "ConstraintEval", "InterExecResult", "ConstraintData", "GainSolution",
    "MuDenominator", "RunConfig", "TriggerRecord", "RunMetrics", "Trajectory", "RunResult",
]
