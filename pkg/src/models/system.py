"""
Plant and benchmark containers.
"""
from dataclasses import dataclass, field

import numpy as np

from src.core.exceptions import DimensionError, InputError
from src.core.linalg import as_matrix, is_positive_definite, symmetrize


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LtiSystem:
    """
    Continuous-time plant dx/dt = A x + B u with quadratic weights Q, R.

    Q and R are symmetrized on construction and must be positive definite.
    Stabilizability is not checked here; it surfaces as a DesignError from
    the Riccati solver.
    """
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        Q = as_matrix(self.Q, "Q")
        R = as_matrix(self.R, "R")

        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError("A must be square", {"shape": list(A.shape)})
        if B.shape[0] != n:
            raise DimensionError("B must have as many rows as A", {"A": list(A.shape), "B": list(B.shape)})
        m = B.shape[1]
        if Q.shape != (n, n):
            raise DimensionError("Q must be n x n", {"n": n, "shape": list(Q.shape)})
        if R.shape != (m, m):
            raise DimensionError("R must be m x m", {"m": m, "shape": list(R.shape)})
        if not is_positive_definite(Q):
            raise InputError("Q must be positive definite")
        if not is_positive_definite(R):
            raise InputError("R must be positive definite")

        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "Q", _frozen(symmetrize(Q)))
        object.__setattr__(self, "R", _frozen(symmetrize(R)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def check_gain(self, F: np.ndarray) -> np.ndarray:
        """Return F as an m x n array or raise DimensionError."""
        F = np.asarray(F, dtype=float)
        if F.shape != (self.m, self.n):
            raise DimensionError("Gain must be m x n", {"expected": [self.m, self.n], "shape": list(F.shape)})
        return F

    def check_state(self, x: np.ndarray) -> np.ndarray:
        """Return x as a length-n vector or raise DimensionError."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.n,):
            raise DimensionError("State must have n entries", {"n": self.n, "size": int(x.size)})
        return x

    def __repr__(self) -> str:
        return f"<LtiSystem(n={self.n}, m={self.m})>"


@dataclass(frozen=True)
class Benchmark:
    """LQR benchmark gain F~ and its Lyapunov certificate P~."""
    gain_tilde: np.ndarray
    value_tilde: np.ndarray
    residual: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "gain_tilde", _frozen(self.gain_tilde))
        object.__setattr__(self, "value_tilde", _frozen(symmetrize(np.asarray(self.value_tilde, dtype=float))))

    def lyapunov_value(self, x: np.ndarray) -> float:
        """V(x) = x^T P~ x."""
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(x @ self.value_tilde @ x)

    def benchmark_cost(self, x0: np.ndarray) -> float:
        """J~(x0), the infinite-horizon cost under u = F~ x."""
        return self.lyapunov_value(x0)

    def __repr__(self) -> str:
        return f"<Benchmark(m={self.gain_tilde.shape[0]}, n={self.gain_tilde.shape[1]}, residual={self.residual:.2e})>"
