"""
Experiment configuration document.
"""
from typing import List, Literal, Optional

from pydantic import Field, field_validator, model_validator

from src.models.run import MuDenominator
from src.schemas.system import CamelModel, NetworkSpec

SweepParameter = Literal["alpha", "beta", "gamma", "eta"]

CONFIG_SCHEMA_VERSION = 1


class RunSpec(CamelModel):
    """Run parameters; defaults reproduce the ten-node network experiment."""
    alpha: float = Field(default=1.15, gt=1.0)
    gamma: float = Field(default=0.001, ge=0)
    eta: float = Field(default=0.001, ge=0)
    k_max: int = Field(default=49, ge=1)
    initial_state: Optional[List[float]] = None
    grid_step_seconds: float = Field(default=0.01, gt=0)
    horizon_seconds: float = Field(default=5.0, gt=0)
    tail_horizon_seconds: float = Field(default=40.0, gt=0)
    zero_threshold: Optional[float] = Field(default=None, ge=0)
    mu_denominator: MuDenominator = MuDenominator.BENCHMARK
    force_benchmark_gain: bool = False
    record_trajectory: bool = True

    @model_validator(mode="after")
    def check_grid(self) -> "RunSpec":
        if self.horizon_seconds < 2 * self.grid_step_seconds:
            raise ValueError("horizonSeconds must cover at least two grid steps")
        return self


class SweepSpec(CamelModel):
    parameter: SweepParameter
    values: List[float] = Field(..., min_length=1)
    seeds_per_point: int = Field(default=5, ge=1)

    @field_validator("values")
    @classmethod
    def strictly_increasing(cls, values: List[float]) -> List[float]:
        for a, b in zip(values, values[1:]):
            if not b > a:
                raise ValueError("sweep values must be strictly increasing")
        return values


class OutputSpec(CamelModel):
    directory: str = "results"
    raw: bool = False
    write_trajectory: bool = True
    write_benchmark: bool = True


class ExperimentConfig(CamelModel):
    """Top-level JSON document read by the CLI."""
    schema_version: int = Field(default=CONFIG_SCHEMA_VERSION)
    network: Optional[NetworkSpec] = None
    system_file: Optional[str] = None
    run: RunSpec = Field(default_factory=RunSpec)
    sweep: Optional[SweepSpec] = None
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def check_plant_source(self) -> "ExperimentConfig":
        if self.network is not None and self.system_file is not None:
            raise ValueError("give either network or systemFile, not both")
        if self.network is None and self.system_file is None:
            self.network = NetworkSpec()
        if self.sweep is not None:
            if self.sweep.parameter == "beta" and self.network is None:
                raise ValueError("a beta sweep needs a generated network")
            if self.sweep.parameter == "alpha" and min(self.sweep.values) <= 1.0:
                raise ValueError("alpha sweep values must exceed 1")
            if self.sweep.parameter == "beta" and min(self.sweep.values) <= 0.0:
                raise ValueError("beta sweep values must be positive")
            if self.sweep.parameter in ("gamma", "eta") and min(self.sweep.values) < 0.0:
                raise ValueError(f"{self.sweep.parameter} sweep values must be nonnegative")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)
