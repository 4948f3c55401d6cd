"""
Trigger service - the performance constraint g(xi; F) and the grid search
for the longest admissible dwell time.

g(xi; F) = J(F, xi; x) + alpha * (V(x(xi)) - V(x)), and the interval is
admissible up to xi while g stays nonpositive (up to a small slack).
g is quadratic in x, so the search runs on x / ||x|| and the slack scales
with ||x||^2.
"""
import numpy as np
from loguru import logger

from src.models.run import ConstraintEval, DesignContext, InterExecResult
from src.services.plant_service import interval_cost, interval_costs, propagate

SLACK_REL_TOL = 1e-9


def slack_tolerance(ctx: DesignContext, x: np.ndarray) -> float:
    """1e-9 * (||x||^2 + V(x)); zero only at the origin."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return SLACK_REL_TOL * (float(x @ x) + abs(ctx.benchmark.lyapunov_value(x)))


def _unit(x: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(x))
    return x / norm if norm > 0.0 else x


def eval_g(ctx: DesignContext, F: np.ndarray, x: np.ndarray, index: int) -> ConstraintEval:
    """Constraint value at one grid index."""
    x = ctx.system.check_state(x)
    F = ctx.system.check_gain(F)
    xi = ctx.grid.point(index)
    if index == 0:
        return ConstraintEval(xi=0.0, value=0.0, satisfied=True)
    cost = interval_cost(ctx.table, F, x, index)
    x_next = propagate(ctx.system, ctx.table, F, x, index)
    value = cost + ctx.alpha * (ctx.benchmark.lyapunov_value(x_next) - ctx.benchmark.lyapunov_value(x))
    return ConstraintEval(xi=xi, value=value, satisfied=value <= slack_tolerance(ctx, x))


def constraint_profile(ctx: DesignContext, F: np.ndarray, x: np.ndarray) -> np.ndarray:
    """g at every grid point at once; entry 0 is exactly zero."""
    x = ctx.system.check_state(x)
    F = ctx.system.check_gain(F)
    table = ctx.table
    P = ctx.benchmark.value_tilde
    u = F @ x
    held = ctx.system.B @ u

    states = np.einsum("kij,j->ki", table.E, x) + np.einsum("kij,j->ki", table.G, held)
    cost = interval_costs(table, F, x)
    decrease = np.einsum("ki,ij,kj->k", states, P, states) - x @ P @ x

    g = cost + ctx.alpha * decrease
    g[0] = 0.0
    return g


def inter_exec(ctx: DesignContext, F: np.ndarray, x: np.ndarray) -> InterExecResult:
    """
    Last grid index of the maximal prefix on which g is satisfied.

    A violation at index 1 gives delta = 0; a prefix covering the whole grid
    returns the horizon with exhausted_horizon set. The result depends on
    the direction of x only.
    """
    unit = _unit(ctx.system.check_state(x))
    g = constraint_profile(ctx, F, unit)
    violated = np.flatnonzero(g > slack_tolerance(ctx, unit))
    count = ctx.grid.count
    index = int(violated[0]) - 1 if violated.size else count - 1
    result = InterExecResult(
        delta=index * ctx.grid.step,
        grid_index=index,
        exhausted_horizon=index == count - 1,
    )
    if result.exhausted_horizon:
        logger.debug(f"Dwell time capped at the table horizon {ctx.grid.horizon}")
    return result
