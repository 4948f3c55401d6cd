"""
Plant service - network generation, benchmark design and exact
sample-and-hold propagation over the integral table.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
from loguru import logger
from pydantic import ValidationError
from scipy.spatial.distance import cdist

from src.core.exceptions import ConfigError, DesignError, DimensionError, OutputError
from src.core.linalg import solve_care, solve_lyapunov
from src.models.system import Benchmark, LtiSystem
from src.models.table import IntegralTable
from src.schemas.system import NetworkSpec, SystemDocument

SQUARE_BLOCK = np.array([[1.0, 1.0], [1.0, 2.0]])
CIRCLE_BLOCK = np.array([[-2.0, 1.0], [1.0, -3.0]])
INPUT_BLOCK = np.array([[0.0], [1.0]])
BENCHMARK_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class NodeLayout:
    """Node coordinates (N x 2) and kinds ("square" unstable, "circle" stable)."""
    positions: np.ndarray
    kinds: List[str]

    def distances(self) -> np.ndarray:
        return cdist(self.positions, self.positions)


def place_nodes(spec: NetworkSpec) -> NodeLayout:
    """Positions first, then kinds, from one seeded generator."""
    rng = np.random.default_rng(spec.seed)
    count = spec.subsystem_count
    if spec.positions is not None:
        positions = np.array(spec.positions, dtype=float).reshape(count, 2)
    else:
        positions = rng.uniform(0.0, spec.region, size=(count, 2))
    if spec.type_assignment is not None:
        kinds = list(spec.type_assignment)
    else:
        kinds = ["square" if coin else "circle" for coin in rng.random(count) < 0.5]
    return NodeLayout(positions=positions, kinds=kinds)


def network_from_layout(layout: NodeLayout, decay_rate: float,
                        state_weight: float = 1.0, input_weight: float = 2.0) -> LtiSystem:
    """Assemble the 2N-state, N-input system for a placed network."""
    count = len(layout.kinds)
    coupling = np.exp(-decay_rate * layout.distances())
    np.fill_diagonal(coupling, 0.0)
    A = np.kron(coupling, np.eye(2))
    for i, kind in enumerate(layout.kinds):
        A[2 * i:2 * i + 2, 2 * i:2 * i + 2] = SQUARE_BLOCK if kind == "square" else CIRCLE_BLOCK
    B = np.kron(np.eye(count), INPUT_BLOCK)
    return LtiSystem(
        A=A,
        B=B,
        Q=state_weight * np.eye(2 * count),
        R=input_weight * np.eye(count),
    )


def generate_network(spec: NetworkSpec) -> LtiSystem:
    """Spatially decaying network; deterministic for a fixed seed."""
    layout = place_nodes(spec)
    system = network_from_layout(layout, spec.decay_rate, spec.state_weight, spec.input_weight)
    squares = sum(1 for kind in layout.kinds if kind == "square")
    logger.debug(f"Generated network N={spec.subsystem_count} beta={spec.decay_rate} "
                 f"seed={spec.seed} squares={squares}")
    return system


def build_benchmark(system: LtiSystem) -> Benchmark:
    """LQR gain F~ and the certificate P~ solving the closed-loop Lyapunov equation."""
    gain, _ = solve_care(system)
    closed_loop = system.A + system.B @ gain
    weight = system.Q + gain.T @ system.R @ gain
    value = solve_lyapunov(closed_loop, 0.5 * (weight + weight.T))

    residual = float(np.linalg.norm(closed_loop.T @ value + value @ closed_loop + weight, 2))
    scale = 1.0 + np.linalg.norm(weight, 2) + 2.0 * np.linalg.norm(closed_loop, 2) * np.linalg.norm(value, 2)
    if residual > BENCHMARK_RESIDUAL_TOL * scale:
        raise DesignError("Benchmark Lyapunov residual too large", {"residual": residual})
    return Benchmark(gain_tilde=gain, value_tilde=value, residual=residual)


def _check_table(system: LtiSystem, table: IntegralTable):
    if (table.n, table.m) != (system.n, system.m):
        raise DimensionError("Table dimensions do not match the system",
                             {"table": [table.n, table.m], "system": [system.n, system.m]})


def transition_matrix(system: LtiSystem, table: IntegralTable, F: np.ndarray, index: int) -> np.ndarray:
    """M(xi) = E(xi) + G(xi) B F, the held-input state transition."""
    _check_table(system, table)
    F = system.check_gain(F)
    E, G, *_ = table.query_at(index)
    return E + G @ system.B @ F


def propagate(system: LtiSystem, table: IntegralTable, F: np.ndarray, x: np.ndarray, index: int) -> np.ndarray:
    """State at t_k + xi under u = F x(t_k) held over the interval."""
    _check_table(system, table)
    F = system.check_gain(F)
    x = system.check_state(x)
    E, G, *_ = table.query_at(index)
    return E @ x + G @ (system.B @ (F @ x))


def sample_interval(system: LtiSystem, table: IntegralTable, F: np.ndarray, x: np.ndarray, index: int) -> np.ndarray:
    """Held-input states at grid points 0..index, shape (index + 1, n)."""
    _check_table(system, table)
    F = system.check_gain(F)
    x = system.check_state(x)
    table.grid.check_index(index)
    held = system.B @ (F @ x)
    return (np.einsum("kij,j->ki", table.E[:index + 1], x)
            + np.einsum("kij,j->ki", table.G[:index + 1], held))


def _cost_arguments(table: IntegralTable, F: np.ndarray, x: np.ndarray):
    F = np.asarray(F, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    if F.shape != (table.m, table.n) or x.shape != (table.n,):
        raise DimensionError("Gain or state does not match the table",
                             {"F": list(F.shape), "x": list(x.shape), "n": table.n, "m": table.m})
    return F, x


def interval_cost(table: IntegralTable, F: np.ndarray, x: np.ndarray, index: int) -> float:
    """x^T Y(F, xi) x with Y = H0 + F^T H1^T + H1 F + F^T H2 F."""
    F, x = _cost_arguments(table, F, x)
    _, _, H0, H1, H2 = table.query_at(index)
    u = F @ x
    value = float(x @ H0 @ x + 2.0 * x @ H1 @ u + u @ H2 @ u)
    return max(value, 0.0)


def interval_costs(table: IntegralTable, F: np.ndarray, x: np.ndarray) -> np.ndarray:
    """interval_cost at every grid index; negative rounding noise is clamped the same way."""
    F, x = _cost_arguments(table, F, x)
    u = F @ x
    cost = (np.einsum("i,kij,j->k", x, table.H0, x)
            + 2.0 * np.einsum("i,kij,j->k", x, table.H1, u)
            + np.einsum("i,kij,j->k", u, table.H2, u))
    return np.maximum(cost, 0.0)


def system_to_document(system: LtiSystem) -> SystemDocument:
    return SystemDocument(
        n=system.n,
        m=system.m,
        A=system.A.ravel().tolist(),
        B=system.B.ravel().tolist(),
        Q=system.Q.ravel().tolist(),
        R=system.R.ravel().tolist(),
    )


def system_from_document(doc: SystemDocument) -> LtiSystem:
    n, m = doc.n, doc.m
    return LtiSystem(
        A=np.reshape(doc.A, (n, n)),
        B=np.reshape(doc.B, (n, m)),
        Q=np.reshape(doc.Q, (n, n)),
        R=np.reshape(doc.R, (m, m)),
    )


def load_system(path: str) -> LtiSystem:
    """Read a system document from JSON."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read system file {path}: {e}") from e
    try:
        doc = SystemDocument.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"Invalid system file {path}: {e.errors()[0]['msg']}") from e
    return system_from_document(doc)


def save_system(system: LtiSystem, path: str) -> None:
    try:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(
            json.dumps(system_to_document(system).model_dump(by_alias=True), indent=2),
            encoding="utf-8",
        )
    except OSError as e:
        raise OutputError(f"Cannot write system file {path}: {e}") from e
