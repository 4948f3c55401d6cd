"""
Time grid and the precomputed integral look-up table.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from src.core.exceptions import DimensionError, InputError, RangeError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0, h, 2h, ..., (count - 1) h."""
    step: float
    count: int

    def __post_init__(self):
        if not np.isfinite(self.step) or self.step <= 0:
            raise InputError("Grid step must be positive", {"step": self.step})
        if int(self.count) != self.count or self.count < 2:
            raise InputError("Grid needs at least two points", {"count": self.count})
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_horizon(cls, step: float, horizon: float) -> "TimeGrid":
        """Grid with the given step whose horizon is at least `horizon`."""
        if step <= 0 or horizon <= 0:
            raise InputError("Step and horizon must be positive", {"step": step, "horizon": horizon})
        intervals = int(np.ceil(horizon / step - 1e-9))
        return cls(step=step, count=max(intervals, 1) + 1)

    @property
    def horizon(self) -> float:
        return self.step * (self.count - 1)

    def point(self, index: int) -> float:
        """Grid time i * h, derived from the index."""
        self.check_index(index)
        return index * self.step

    def points(self) -> np.ndarray:
        return np.arange(self.count) * self.step

    def check_index(self, index: int) -> int:
        if index < 0 or index >= self.count:
            raise RangeError(index, self.count)
        return int(index)


class TableSlice(NamedTuple):
    """Matrices stored at one grid point."""
    E: np.ndarray
    G: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    H2: np.ndarray


@dataclass(frozen=True)
class IntegralTable:
    """
    Grid samples of E = e^{A xi}, G = int_0^xi e^{A s} ds and the cost kernels
    H0 (n x n), H1 (n x m), H2 (m x m).

    Arrays are stacked along axis 0, one slice per grid point, and are
    read-only after construction.
    """
    grid: TimeGrid
    E: np.ndarray
    G: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    H2: np.ndarray

    def __post_init__(self):
        count = self.grid.count
        n = self.E.shape[1]
        m = self.H2.shape[1]
        expected = {
            "E": (count, n, n), "G": (count, n, n), "H0": (count, n, n),
            "H1": (count, n, m), "H2": (count, m, m),
        }
        for name, shape in expected.items():
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise DimensionError(f"Table array {name} has the wrong shape",
                                     {"expected": list(shape), "shape": list(arr.shape)})
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.E.shape[1]

    @property
    def m(self) -> int:
        return self.H2.shape[1]

    def query_at(self, index: int) -> TableSlice:
        """Stored matrices at grid index (views, no recomputation)."""
        self.grid.check_index(index)
        return TableSlice(self.E[index], self.G[index], self.H0[index], self.H1[index], self.H2[index])

    def __repr__(self) -> str:
        return f"<IntegralTable(n={self.n}, m={self.m}, step={self.grid.step}, count={self.grid.count})>"
