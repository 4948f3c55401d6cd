"""
Value objects passed between the trigger, gain and engine services.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from src.core.exceptions import InputError
from src.models.system import Benchmark, LtiSystem
from src.models.table import IntegralTable, TimeGrid


@dataclass(frozen=True)
class DesignContext:
    """Everything the constraint g(xi; F) needs besides F and x."""
    system: LtiSystem
    benchmark: Benchmark
    table: IntegralTable
    alpha: float

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise InputError("alpha must exceed 1", {"alpha": self.alpha})
        if (self.table.n, self.table.m) != (self.system.n, self.system.m):
            raise InputError("Table was built for a different system",
                             {"table": [self.table.n, self.table.m], "system": [self.system.n, self.system.m]})

    @property
    def grid(self) -> TimeGrid:
        return self.table.grid


@dataclass(frozen=True)
class ConstraintEval:
    xi: float
    value: float
    satisfied: bool


@dataclass(frozen=True)
class InterExecResult:
    """Longest verified dwell time; delta = grid_index * h."""
    delta: float
    grid_index: int
    exhausted_horizon: bool


@dataclass(frozen=True)
class ConstraintData:
    """
    Scalar constraint (1/2) u^T P2 u + q2^T u + r1 <= 0 at u = F x, fixed xi.
    """
    P2: np.ndarray
    q2: np.ndarray
    r1: float
    xi: float
    index: int

    def value(self, u: np.ndarray) -> float:
        u = np.asarray(u, dtype=float).reshape(-1)
        return float(0.5 * u @ self.P2 @ u + self.q2 @ u + self.r1)


@dataclass
class GainSolution:
    F: np.ndarray
    objective: float
    scalar_margin: float
    matrix_margin: float
    iterations: int
    converged: bool


class MuDenominator(str, Enum):
    """Reference count for the input cardinality ratio."""
    BENCHMARK = "benchmark"  # ||F~ x_k||_0
    INPUTS = "inputs"        # m


@dataclass
class RunConfig:
    """Parameters of one self-triggered run."""
    alpha: float
    gamma: float
    eta: float
    k_max: int
    x0: np.ndarray
    grid: TimeGrid
    tail_horizon: float = 40.0
    zero_threshold: Optional[float] = None
    mu_denominator: MuDenominator = MuDenominator.BENCHMARK
    force_benchmark_gain: bool = False
    record_trajectory: bool = False

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise InputError("alpha must exceed 1", {"alpha": self.alpha})
        if self.gamma < 0 or self.eta < 0:
            raise InputError("gamma and eta must be nonnegative", {"gamma": self.gamma, "eta": self.eta})
        if self.k_max < 1:
            raise InputError("kMax must be at least 1", {"kMax": self.k_max})
        if self.tail_horizon <= 0:
            raise InputError("tailHorizon must be positive", {"tailHorizon": self.tail_horizon})
        if self.zero_threshold is not None and self.zero_threshold < 0:
            raise InputError("zeroThreshold must be nonnegative", {"zeroThreshold": self.zero_threshold})
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        self.mu_denominator = MuDenominator(self.mu_denominator)


@dataclass
class TriggerRecord:
    """One hold interval [t_k, t_k + delta_k)."""
    k: int
    t: float
    delta: float
    grid_index: int
    F: np.ndarray
    x: np.ndarray
    u: np.ndarray
    interval_cost: float
    converged: bool
    fallback: bool = False
    lyapunov_value: float = 0.0
    state_norm: float = 0.0


@dataclass
class RunMetrics:
    kappa: List[float]
    mu: List[float]
    RF: float
    RU: float
    D: float
    total_cost: float
    benchmark_cost: float
    nu: float
    truncation_tolerance: float
    zero_threshold: float
    sum_delta: float
    fallback_count: int = 0
    nonconverged_count: int = 0

    def to_dict(self) -> dict:
        return {
            "kappa": list(self.kappa),
            "mu": list(self.mu),
            "RF": self.RF,
            "RU": self.RU,
            "D": self.D,
            "totalCost": self.total_cost,
            "benchmarkCost": self.benchmark_cost,
            "nu": self.nu,
            "truncationTolerance": self.truncation_tolerance,
            "zeroThreshold": self.zero_threshold,
            "sumDelta": self.sum_delta,
            "fallbackCount": self.fallback_count,
            "nonconvergedCount": self.nonconverged_count,
        }


@dataclass
class Trajectory:
    """Grid-sampled closed-loop states."""
    times: np.ndarray
    states: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


@dataclass
class RunResult:
    records: List[TriggerRecord]
    metrics: RunMetrics
    final_state: np.ndarray
    transition: np.ndarray
    trajectory: Optional[Trajectory] = None
    extras: dict = field(default_factory=dict)
