"""
Pytest configuration and fixtures.
"""
import os
import sys
from typing import Callable

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config.settings import settings
from src.models.run import DesignContext
from src.models.system import LtiSystem
from src.models.table import TimeGrid
from src.schemas.system import NetworkSpec
from src.services.plant_service import build_benchmark
from src.services.table_service import build_table


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run long statistical experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical experiment (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """No log files and no table cache unless a test asks for one."""
    monkeypatch.setattr(settings, "log_file", "")
    monkeypatch.setattr(settings, "table_cache_dir", "")
    monkeypatch.setattr(settings, "threads", 1)


def scalar_system(a: float, b: float = 1.0, q: float = 1.0, r: float = 1.0) -> LtiSystem:
    return LtiSystem(A=[[a]], B=[[b]], Q=[[q]], R=[[r]])


def random_system(seed: int, n: int = 3, m: int = 2) -> LtiSystem:
    """A ~ N(0, 1/n), B ~ N(0, 1), identity weights; stabilizable almost surely."""
    rng = np.random.default_rng(seed)
    return LtiSystem(
        A=rng.standard_normal((n, n)) / np.sqrt(n),
        B=rng.standard_normal((n, m)),
        Q=np.eye(n),
        R=np.eye(m),
    )


def make_context(system: LtiSystem, alpha: float = 1.15, step: float = 0.01, count: int = 201) -> DesignContext:
    benchmark = build_benchmark(system)
    table = build_table(system, TimeGrid(step=step, count=count))
    return DesignContext(system=system, benchmark=benchmark, table=table, alpha=alpha)


@pytest.fixture
def scalar_factory() -> Callable[..., LtiSystem]:
    return scalar_system


@pytest.fixture
def random_factory() -> Callable[..., LtiSystem]:
    return random_system


@pytest.fixture
def context_factory() -> Callable[..., DesignContext]:
    return make_context


@pytest.fixture
def stable_scalar_context() -> DesignContext:
    """a = -1, b = 1, q = 1, r = 2 on a 2-second grid, alpha = 1.15."""
    return make_context(scalar_system(-1.0, 1.0, 1.0, 2.0), alpha=1.15)


@pytest.fixture
def small_network_spec() -> NetworkSpec:
    return NetworkSpec(subsystem_count=3, seed=7)
