"""
Gain service - constraint data at a fixed dwell time, the two LMI forms and
the sparse feedback-gain program.

The program

    minimize    gamma * ||F||_1 + eta * ||F x||_1
    subject to  (1/2) u^T P2 u + q2^T u + r1 <= 0,    u = F x
                Q + F^T R F + alpha * ((A + B F)^T P~ + P~ (A + B F)) < 0

is convex; it is solved by a log-barrier interior-point method with the
l1 terms moved into epigraph variables.
"""
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger

from src.core.exceptions import DegenerateIntervalError, FeasibilityError, NumericalError
from src.core.linalg import is_positive_definite, max_eigenvalue, min_eigenvalue, symmetrize
from src.models.run import ConstraintData, DesignContext, GainSolution
from src.models.system import Benchmark, LtiSystem

OBJECTIVE_SLACK = 1e-6
ZERO_WEIGHT = 1e-14


# ============ Constraint data and LMI forms ============

def build_constraint(ctx: DesignContext, x: np.ndarray, index: int) -> ConstraintData:
    """P2, q2 and r1 of the endpoint constraint at xi = index * h."""
    x = ctx.system.check_state(x)
    if index == 0:
        raise DegenerateIntervalError(details={"index": index})
    E, G, H0, H1, H2 = ctx.table.query_at(index)
    P = ctx.benchmark.value_tilde
    GB = G @ ctx.system.B
    alpha = ctx.alpha

    P2 = symmetrize(2.0 * H2 + 2.0 * alpha * GB.T @ P @ GB)
    q2 = (2.0 * H1.T + 2.0 * alpha * GB.T @ P @ E) @ x
    r1 = float(x @ (H0 + alpha * (E.T @ P @ E - P)) @ x)
    if not is_positive_definite(P2):
        raise NumericalError("P2 lost positive definiteness", {"index": index, "minEig": min_eigenvalue(P2)})
    return ConstraintData(P2=P2, q2=q2, r1=r1, xi=ctx.grid.point(index), index=index)


def constraint_value(data: ConstraintData, F: np.ndarray, x: np.ndarray) -> float:
    return data.value(np.asarray(F, dtype=float) @ np.asarray(x, dtype=float).reshape(-1))


def schur_lmi_matrix(data: ConstraintData, u: np.ndarray) -> np.ndarray:
    """[[2 P2^{-1}, u], [u^T, -q2^T u - r1]]."""
    u = np.asarray(u, dtype=float).reshape(-1)
    m = u.size
    block = np.empty((m + 1, m + 1))
    block[:m, :m] = 2.0 * scipy.linalg.inv(data.P2)
    block[:m, m] = u
    block[m, :m] = u
    block[m, m] = -data.q2 @ u - data.r1
    return symmetrize(block)


def schur_lmi_holds(data: ConstraintData, u: np.ndarray, tol: float = 1e-12) -> bool:
    """Positive semidefiniteness of the Schur form of the endpoint constraint."""
    block = schur_lmi_matrix(data, u)
    return min_eigenvalue(block) >= -tol * (1.0 + np.max(np.abs(block)))


def matrix_inequality_lhs(system: LtiSystem, benchmark: Benchmark, alpha: float, F: np.ndarray) -> np.ndarray:
    """Q + F^T R F + alpha ((A + B F)^T P~ + P~ (A + B F)), symmetrized."""
    F = system.check_gain(F)
    P = benchmark.value_tilde
    closed_loop = system.A + system.B @ F
    return symmetrize(system.Q + F.T @ system.R @ F + alpha * (closed_loop.T @ P + P @ closed_loop))


def gain_lmi_matrix(system: LtiSystem, benchmark: Benchmark, alpha: float, F: np.ndarray) -> np.ndarray:
    """[[R^{-1}, F], [F^T, -alpha ((A + B F)^T P~ + P~ (A + B F)) - Q]]."""
    F = system.check_gain(F)
    m, n = system.m, system.n
    P = benchmark.value_tilde
    closed_loop = system.A + system.B @ F
    block = np.empty((m + n, m + n))
    block[:m, :m] = scipy.linalg.inv(system.R)
    block[:m, m:] = F
    block[m:, :m] = F.T
    block[m:, m:] = -alpha * (closed_loop.T @ P + P @ closed_loop) - system.Q
    return symmetrize(block)


def check_strict_feasibility_lmi(system: LtiSystem, benchmark: Benchmark, alpha: float,
                                 F: np.ndarray, margin: float = 0.0) -> bool:
    """True iff the largest eigenvalue of the matrix inequality is at most -margin."""
    return max_eigenvalue(matrix_inequality_lhs(system, benchmark, alpha, F)) <= -margin


def objective_value(F: np.ndarray, x: np.ndarray, gamma: float, eta: float) -> float:
    """gamma * sum|F_ij| + eta * sum|(F x)_i|."""
    F = np.asarray(F, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(gamma * np.abs(F).sum() + eta * np.abs(F @ x).sum())


# ============ Barrier solver ============

@dataclass(frozen=True)
class BarrierOptions:
    t0: float = 1.0
    mu: float = 10.0
    gap_tol: float = 1e-8
    newton_tol: float = 1e-10
    max_outer: int = 50
    max_inner: int = 100
    armijo: float = 0.01
    backtrack: float = 0.5
    min_step: float = 1e-14


class _BarrierProblem:
    """
    Barrier for the gain program in the normalized state xh = x / ||x||.

    Variables are vec(F) (row-major), epigraph bounds t >= |F| when gamma > 0
    and s >= |F xh| when the input weight is positive. The t block is
    diagonal and is eliminated from every Newton system.
    """

    def __init__(self, ctx: DesignContext, data: Optional[ConstraintData], x: np.ndarray,
                 gamma: float, eta: float):
        system, P = ctx.system, ctx.benchmark.value_tilde
        self.m, self.n = system.m, system.n
        self.alpha = ctx.alpha
        self.R = system.R
        self.BP = system.B.T @ P
        self.W0 = symmetrize(system.Q + ctx.alpha * (system.A.T @ P + P @ system.A))
        self.eps = 1e-8 * (1.0 + np.linalg.norm(P, 2))

        norm = float(np.linalg.norm(x))
        self.has_scalar = data is not None and norm > 0.0
        if self.has_scalar:
            self.xh = x / norm
            self.P2 = data.P2
            self.q2 = data.q2 / norm
            self.r1 = data.r1 / norm ** 2
        else:
            self.xh = np.zeros(self.n)
        self.gamma = gamma
        self.eta = eta * norm
        self.use_t = gamma > 0.0
        self.use_s = self.has_scalar and self.eta > ZERO_WEIGHT

        self.mn = self.m * self.n
        self.barrier_count = (1 if self.has_scalar else 0) + self.n \
            + (2 * self.mn if self.use_t else 0) + (2 * self.m if self.use_s else 0)

    # ---- pieces ----

    def gain_of(self, z: np.ndarray) -> np.ndarray:
        return z[:self.mn].reshape(self.m, self.n)

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
        f = z[:self.mn]
        offset = self.mn
        t = s = None
        if self.use_t:
            t = z[offset:offset + self.mn]
            offset += self.mn
        if self.use_s:
            s = z[offset:offset + self.m]
        return f, t, s

    def scalar(self, F: np.ndarray) -> float:
        u = F @ self.xh
        return float(0.5 * u @ self.P2 @ u + self.q2 @ u + self.r1)

    def lmi(self, F: np.ndarray) -> np.ndarray:
        cross = F.T @ self.BP
        return symmetrize(self.W0 + F.T @ self.R @ F + self.alpha * (cross + cross.T))

    def slack_factor(self, F: np.ndarray):
        """Cholesky factor of -W(F) - eps I, or None outside the domain."""
        slack = -self.lmi(F) - self.eps * np.eye(self.n)
        try:
            return scipy.linalg.cholesky(slack, lower=True)
        except np.linalg.LinAlgError:
            return None

    def pack(self, F: np.ndarray) -> np.ndarray:
        parts = [F.ravel()]
        if self.use_t:
            parts.append(np.abs(F.ravel()) + 1.0)
        if self.use_s:
            parts.append(np.abs(F @ self.xh) + 1.0)
        return np.concatenate(parts)

    def objective(self, z: np.ndarray) -> float:
        _, t, s = self.split(z)
        value = 0.0
        if t is not None:
            value += self.gamma * t.sum()
        if s is not None:
            value += self.eta * s.sum()
        return value

    def value(self, z: np.ndarray, tau: float) -> float:
        """tau * objective + barrier, +inf outside the domain."""
        f, t, s = self.split(z)
        F = f.reshape(self.m, self.n)
        total = 0.0
        if self.has_scalar:
            c = self.scalar(F)
            if not c < 0.0:
                return np.inf
            total -= np.log(-c)
        chol = self.slack_factor(F)
        if chol is None:
            return np.inf
        total -= 2.0 * np.sum(np.log(np.diag(chol)))
        if t is not None:
            lower, upper = t - f, t + f
            if np.any(lower <= 0.0) or np.any(upper <= 0.0):
                return np.inf
            total -= np.sum(np.log(lower)) + np.sum(np.log(upper))
        if s is not None:
            u = F @ self.xh
            lower, upper = s - u, s + u
            if np.any(lower <= 0.0) or np.any(upper <= 0.0):
                return np.inf
            total -= np.sum(np.log(lower)) + np.sum(np.log(upper))
        return tau * self.objective(z) + total

    def newton_step(self, z: np.ndarray, tau: float) -> Tuple[np.ndarray, float]:
        """Newton direction and decrement squared at a strictly feasible z."""
        f, t, s = self.split(z)
        F = f.reshape(self.m, self.n)
        mn, m = self.mn, self.m

        grad_f = np.zeros(mn)
        hess_ff = np.zeros((mn, mn))

        if self.has_scalar:
            u = F @ self.xh
            c = self.scalar(F)
            dc = np.outer(self.P2 @ u + self.q2, self.xh).ravel()
            grad_f += dc / -c
            hess_ff += np.outer(dc, dc) / c ** 2 + np.kron(self.P2, np.outer(self.xh, self.xh)) / -c

        chol = self.slack_factor(F)
        S = scipy.linalg.cho_solve((chol, True), np.eye(self.n))
        K = self.R @ F + self.alpha * self.BP
        Y = K @ S
        grad_f += 2.0 * Y.ravel()
        hess_ff += 2.0 * np.kron(K @ S @ K.T + self.R, S)
        hess_ff += 2.0 * np.einsum("il,kj->ijkl", Y, Y).reshape(mn, mn)

        grad_s = hess_fs = h_ss = None
        if s is not None:
            u = F @ self.xh
            lower, upper = s - u, s + u
            grad_u = 1.0 / lower - 1.0 / upper
            grad_s = -1.0 / lower - 1.0 / upper + tau * self.eta
            h_uu = 1.0 / lower ** 2 + 1.0 / upper ** 2
            h_su = -1.0 / lower ** 2 + 1.0 / upper ** 2
            grad_f += np.outer(grad_u, self.xh).ravel()
            hess_ff += np.kron(np.diag(h_uu), np.outer(self.xh, self.xh))
            hess_fs = np.kron(np.diag(h_su), self.xh.reshape(-1, 1))
            h_ss = h_uu

        if t is not None:
            lower, upper = t - f, t + f
            grad_t = -1.0 / lower - 1.0 / upper + tau * self.gamma
            h_tt = 1.0 / lower ** 2 + 1.0 / upper ** 2
            h_ft = -1.0 / lower ** 2 + 1.0 / upper ** 2
            grad_f_t = 1.0 / lower - 1.0 / upper
            grad_f += grad_f_t
            hess_ff[np.diag_indices(mn)] += h_tt
            ratio = h_ft / h_tt
            hess_ff[np.diag_indices(mn)] -= h_ft * ratio
            rhs_f = grad_f - ratio * grad_t
        else:
            rhs_f = grad_f

        if s is not None:
            system = np.zeros((mn + m, mn + m))
            system[:mn, :mn] = hess_ff
            system[:mn, mn:] = hess_fs
            system[mn:, :mn] = hess_fs.T
            system[mn:, mn:] = np.diag(h_ss)
            rhs = np.concatenate([rhs_f, grad_s])
        else:
            system = hess_ff
            rhs = rhs_f

        step = _solve_spd(system, -rhs)
        d_f = step[:mn]
        parts = [d_f]
        decrement = -(grad_f @ d_f)
        if t is not None:
            d_t = (-grad_t - h_ft * d_f) / h_tt
            parts.append(d_t)
            decrement -= grad_t @ d_t
        if s is not None:
            d_s = step[mn:]
            parts.append(d_s)
            decrement -= grad_s @ d_s
        return np.concatenate(parts), float(decrement)


def _solve_spd(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(H, rhs, assume_a="pos")
        except np.linalg.LinAlgError:
            return scipy.linalg.lstsq(H, rhs)[0]


def _interior_start(problem: _BarrierProblem, gain_tilde: np.ndarray) -> Optional[np.ndarray]:
    """F~ moved toward the unconstrained minimizer of the scalar constraint."""
    if not problem.has_scalar:
        return gain_tilde.copy()
    u_star = -scipy.linalg.solve(problem.P2, problem.q2, assume_a="pos")
    if problem.r1 + 0.5 * problem.q2 @ u_star >= -1e-12:
        return None
    correction = np.outer(u_star - gain_tilde @ problem.xh, problem.xh)
    theta = 1.0
    while theta > 1e-12:
        candidate = gain_tilde + theta * correction
        if problem.scalar(candidate) < 0.0 and problem.slack_factor(candidate) is not None:
            return candidate
        theta *= 0.5
    return None


def _solution(ctx: DesignContext, data: Optional[ConstraintData], F: np.ndarray, x: np.ndarray,
              gamma: float, eta: float, iterations: int, converged: bool) -> GainSolution:
    scalar_margin = -constraint_value(data, F, x) if data is not None else 0.0
    matrix_margin = -max_eigenvalue(matrix_inequality_lhs(ctx.system, ctx.benchmark, ctx.alpha, F))
    return GainSolution(
        F=F,
        objective=objective_value(F, x, gamma, eta),
        scalar_margin=scalar_margin,
        matrix_margin=matrix_margin,
        iterations=iterations,
        converged=converged,
    )


def feedback_gain(ctx: DesignContext, data: Optional[ConstraintData], x: np.ndarray,
                  gamma: float, eta: float, options: Optional[BarrierOptions] = None) -> GainSolution:
    """
    Sparse gain for the current state at a fixed dwell time.

    `data` may be None only when x = 0, where the endpoint constraint is
    vacuous. On non-convergence or failed certification the benchmark gain
    is returned with converged=False.

    Raises:
        FeasibilityError: the benchmark gain is not strictly feasible.
    """
    options = options or BarrierOptions()
    x = ctx.system.check_state(x)
    if data is None and np.any(x != 0.0):
        raise DegenerateIntervalError("Constraint data is required for a nonzero state")
    gain_tilde = np.array(ctx.benchmark.gain_tilde)
    problem = _BarrierProblem(ctx, data, x, gamma, eta)

    if problem.slack_factor(gain_tilde) is None:
        raise FeasibilityError(details={"maxEig": max_eigenvalue(problem.lmi(gain_tilde))})

    if not problem.use_t and not problem.use_s:
        return _solution(ctx, data, gain_tilde, x, gamma, eta, 0, True)

    start = _interior_start(problem, gain_tilde)
    if start is None:
        logger.warning("Endpoint constraint has no strict interior; keeping the benchmark gain")
        return _solution(ctx, data, gain_tilde, x, gamma, eta, 0, False)

    z = problem.pack(start)
    tau = options.t0
    iterations = 0
    gap_met = False
    for _ in range(options.max_outer):
        for _ in range(options.max_inner):
            direction, decrement = problem.newton_step(z, tau)
            iterations += 1
            if decrement / 2.0 <= options.newton_tol:
                break
            current = problem.value(z, tau)
            slope = -decrement
            step = 1.0
            while step >= options.min_step and not np.isfinite(problem.value(z + step * direction, tau)):
                step *= options.backtrack
            while step >= options.min_step and \
                    problem.value(z + step * direction, tau) > current + options.armijo * step * slope:
                step *= options.backtrack
            if step < options.min_step:
                break
            z = z + step * direction
        if problem.barrier_count / tau < options.gap_tol:
            gap_met = True
            break
        tau *= options.mu

    candidate = problem.gain_of(z).copy()
    if not gap_met:
        logger.warning(f"Gain solver stopped without reaching the gap tolerance after {iterations} Newton steps")
        return _solution(ctx, data, gain_tilde, x, gamma, eta, iterations, False)

    solution = _solution(ctx, data, candidate, x, gamma, eta, iterations, True)
    reference = objective_value(gain_tilde, x, gamma, eta)
    scale = float(x @ x) + abs(data.r1) if data is not None else 1.0
    if solution.scalar_margin < -1e-9 * scale or solution.matrix_margin <= 0.0 \
            or solution.objective > reference + OBJECTIVE_SLACK:
        logger.warning(f"Gain certification failed (scalar {solution.scalar_margin:.3e}, "
                       f"matrix {solution.matrix_margin:.3e}); keeping the benchmark gain")
        return _solution(ctx, data, gain_tilde, x, gamma, eta, iterations, False)
    return solution
