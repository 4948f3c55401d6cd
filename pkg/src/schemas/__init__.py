"""Schemas package - Pydantic models for configuration and result documents."""
from src.schemas.system import CamelModel, NetworkSpec, SystemDocument, NodeKind
from src.schemas.experiment import (
    RunSpec, SweepSpec, OutputSpec, ExperimentConfig, SweepParameter, CONFIG_SCHEMA_VERSION
)
from src.schemas.results import MetricsDocument, SweepRow, SweepRawRow, RESULTS_SCHEMA_VERSION

__all__ = [
    "CamelModel", "NetworkSpec", "SystemDocument", "NodeKind",
    "RunSpec", "SweepSpec", "OutputSpec", "ExperimentConfig", "SweepParameter",
    "CONFIG_SCHEMA_VERSION",
    "MetricsDocument", "SweepRow", "SweepRawRow", "RESULTS_SCHEMA_VERSION",
]
