"""
Schemas for result documents written by the CLI.
"""
from typing import Any, Dict, List

from pydantic import Field

from src.schemas.system import CamelModel

RESULTS_SCHEMA_VERSION = 1


class MetricsDocument(CamelModel):
    """Contents of metrics.json."""
    schema_version: int = RESULTS_SCHEMA_VERSION
    metrics: Dict[str, Any]
    config: Dict[str, Any]
    seed: int
    state_dimension: int
    input_dimension: int
    benchmark_gain_nonzeros: int
    final_state_norm: float
    initial_state: List[float]


class SweepRow(CamelModel):
    """One row of the sweep result table."""
    parameter: str
    value: float
    mean_r_f: float = Field(alias="meanRF")
    mean_r_u: float = Field(alias="meanRU")
    mean_d: float = Field(alias="meanD")
    mean_nu: float = Field(alias="meanNu")
    run_count: int


class SweepRawRow(CamelModel):
    """Per-seed row of sweep_raw.csv."""
    parameter: str
    value: float
    seed: int
    r_f: float = Field(alias="RF")
    r_u: float = Field(alias="RU")
    d: float = Field(alias="D")
    nu: float
    fallback_count: int
    nonconverged_count: int
