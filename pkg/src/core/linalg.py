"""
Dense real-matrix kernels: matrix exponential, Lyapunov and Riccati solvers,
spectral and definiteness tests.

All functions are pure; symmetric outputs are explicitly symmetrized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from src.core.exceptions import (
    DesignError, DimensionError, InputError, NoUniqueSolutionError
)

if TYPE_CHECKING:
    from src.models.system import LtiSystem

SYMMETRY_TOL = 1e-10
CARE_TOL = 1e-10
CARE_MAX_ITER = 100
SIGN_TOL = 1e-12
SIGN_MAX_ITER = 100


@dataclass(frozen=True)
class SpectralInfo:
    """Eigenvalues of a square matrix and its Hurwitz flag."""
    eigenvalues: np.ndarray
    is_hurwitz: bool


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Convert to a 2-D float64 array with finite entries."""
    arr = np.array(data, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional", {"shape": list(arr.shape)})
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _require_square(A: np.ndarray, name: str = "A"):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square", {"shape": list(A.shape)})


def expm(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Return e^{At} (Pade scaling-and-squaring)."""
    A = np.asarray(A, dtype=float)
    _require_square(A)
    if t < 0:
        raise InputError("Duration must be nonnegative", {"t": t})
    return scipy.linalg.expm(A * t)


def spectral(A: np.ndarray) -> SpectralInfo:
    """Eigenvalues and Hurwitz flag of a square matrix."""
    A = np.asarray(A, dtype=float)
    _require_square(A)
    eigenvalues = scipy.linalg.eigvals(A)
    return SpectralInfo(
        eigenvalues=eigenvalues,
        is_hurwitz=bool(np.all(eigenvalues.real < 0))
    )


def min_eigenvalue(M: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(symmetrize(np.asarray(M, dtype=float)))[0])


def max_eigenvalue(M: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh(symmetrize(np.asarray(M, dtype=float)))[-1])


def is_positive_definite(M: np.ndarray, margin: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of the symmetrized M exceeds margin."""
    M = np.asarray(M, dtype=float)
    _require_square(M, "M")
    return min_eigenvalue(M) > margin


def _is_symmetric(S: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    return bool(np.max(np.abs(S - S.T), initial=0.0) <= SYMMETRY_TOL * scale)


def _kron_lyapunov(Acl: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Solve Acl^T P + P Acl + S = 0 by vectorization (column-major vec)."""
    n = Acl.shape[0]
    eye = np.eye(n)
    operator = np.kron(eye, Acl.T) + np.kron(Acl.T, eye)
    vec_p = scipy.linalg.solve(operator, -S.reshape(-1, order="F"))
    return symmetrize(vec_p.reshape(n, n, order="F"))


def solve_lyapunov(Acl: np.ndarray, S: np.ndarray) -> np.ndarray:
    """
    Unique symmetric solution of Acl^T P + P Acl + S = 0.

    Raises:
        NoUniqueSolutionError: Acl is not Hurwitz.
        InputError: S is not symmetric.
    """
    Acl = np.asarray(Acl, dtype=float)
    S = np.asarray(S, dtype=float)
    _require_square(Acl, "Acl")
    _require_square(S, "S")
    if S.shape != Acl.shape:
        raise DimensionError("Acl and S must have the same shape",
                             {"Acl": list(Acl.shape), "S": list(S.shape)})
    if not _is_symmetric(S):
        raise InputError("S must be symmetric")
    if not spectral(Acl).is_hurwitz:
        raise NoUniqueSolutionError("Closed-loop matrix is not Hurwitz")
    try:
        return _kron_lyapunov(Acl, symmetrize(S))
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolutionError("Lyapunov operator is numerically singular") from exc


def care_residual(A, B, Q, R, P) -> np.ndarray:
    """Left side of A^T P + P A - P B R^{-1} B^T P + Q."""
    BRB = B @ scipy.linalg.solve(R, B.T, assume_a="pos")
    return A.T @ P + P @ A - P @ BRB @ P + Q


def _shift_stabilizing_gain(A: np.ndarray, B: np.ndarray) -> Optional[np.ndarray]:
    """
    Stabilizing gain by eigenvalue shift (Bass).

    With beta > -min Re(eig A), Z solves (A + beta I) Z + Z (A + beta I)^T = 2 B B^T
    and F = -B^T Z^{-1} moves the controllable modes to Re(s) = -beta.
    Returns None when Z is numerically singular.
    """
    n = A.shape[0]
    info = spectral(A)
    if info.is_hurwitz:
        return np.zeros((B.shape[1], n))
    beta = max(0.0, -float(np.min(info.eigenvalues.real))) + 1.0
    shifted = -(A + beta * np.eye(n)).T
    try:
        Z = _kron_lyapunov(shifted, 2.0 * B @ B.T)
        return -scipy.linalg.solve(Z, B, assume_a="pos").T
    except np.linalg.LinAlgError:
        return None


def _sign_function_gain(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray) -> Optional[np.ndarray]:
    """
    Gain from the stable invariant subspace of the Hamiltonian, found by the
    scaled Newton iteration for the matrix sign function.
    """
    n = A.shape[0]
    S = B @ scipy.linalg.solve(R, B.T, assume_a="pos")
    Z = np.block([[A, -S], [-Q, -A.T]])
    try:
        for _ in range(SIGN_MAX_ITER):
            Z_inv = scipy.linalg.inv(Z)
            c = np.sqrt(np.linalg.norm(Z) / np.linalg.norm(Z_inv))
            update = Z / (2.0 * c) + 0.5 * c * Z_inv
            done = np.linalg.norm(update - Z) <= SIGN_TOL * np.linalg.norm(Z)
            Z = update
            if done:
                break
        # (W + I) annihilates the stable subspace spanned by [I; X]
        lhs = np.vstack([Z[:n, n:], Z[n:, n:] + np.eye(n)])
        rhs = -np.vstack([Z[:n, :n] + np.eye(n), Z[n:, :n]])
        X = symmetrize(scipy.linalg.lstsq(lhs, rhs)[0])
        return -scipy.linalg.solve(R, B.T @ X, assume_a="pos")
    except (np.linalg.LinAlgError, ValueError):
        return None


def _newton_kleinman(A, B, Q, R, F) -> Tuple[np.ndarray, np.ndarray]:
    """Newton-Kleinman iteration from a stabilizing gain; raises DesignError on failure."""
    P = None
    scale = 1.0 + np.linalg.norm(Q, 2)
    for iteration in range(1, CARE_MAX_ITER + 1):
        try:
            P = solve_lyapunov(A + B @ F, Q + F.T @ R @ F)
        except NoUniqueSolutionError as exc:
            raise DesignError("Newton-Kleinman iterate lost stability") from exc
        F = -scipy.linalg.solve(R, B.T @ P, assume_a="pos")
        residual = np.linalg.norm(care_residual(A, B, Q, R, P), 2)
        if residual <= CARE_TOL * (scale + np.linalg.norm(P, 2) * (1.0 + np.linalg.norm(A, 2))):
            logger.debug(f"CARE converged after {iteration} Newton-Kleinman steps")
            break
    else:
        logger.warning(f"CARE did not reach tolerance in {CARE_MAX_ITER} iterations")

    if not spectral(A + B @ F).is_hurwitz:
        raise DesignError("Riccati gain does not stabilize the plant")
    residual = np.linalg.norm(care_residual(A, B, Q, R, P), 2)
    if residual > 1e-8 * (scale + np.linalg.norm(P, 2) * (1.0 + np.linalg.norm(A, 2))):
        raise DesignError("Riccati residual too large", {"residual": float(residual)})
    return F, symmetrize(P)


def solve_care(system: "LtiSystem") -> Tuple[np.ndarray, np.ndarray]:
    """
    Stabilizing solution of the continuous algebraic Riccati equation.

    Newton-Kleinman iteration, started from an eigenvalue-shift stabilizing
    gain and, if that start is ill-conditioned, from the sign-function gain.

    Returns:
        (gain, value) with gain = -R^{-1} B^T P.

    Raises:
        DesignError: no stabilizing gain could be produced.
    """
    A, B, Q, R = system.A, system.B, system.Q, system.R
    last_error = DesignError("Pair (A, B) is not stabilizable")
    for name, start in (("shift", lambda: _shift_stabilizing_gain(A, B)),
                        ("sign", lambda: _sign_function_gain(A, B, Q, R))):
        F = start()
        if F is None or not spectral(A + B @ F).is_hurwitz:
            logger.debug(f"CARE start '{name}' is not stabilizing")
            continue
        try:
            return _newton_kleinman(A, B, Q, R, F)
        except DesignError as exc:
            logger.debug(f"CARE start '{name}' failed: {exc.message}")
            last_error = exc
    raise last_error
