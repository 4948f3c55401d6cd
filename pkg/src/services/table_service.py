"""
Look-up table construction and an on-disk table cache.

All five kernels come out of one fourth-order Runge-Kutta pass over the
coupled system

    E' = A E,  G' = E,  H0' = E^T Q E,  H1' = E^T Q G B,  H2' = (GB)^T Q (GB) + R

with E(0) = I and everything else zero.
"""
import hashlib
import os
import struct
import tempfile
from pathlib import Path
from typing import Optional, Dict

import numpy as np
from loguru import logger

from src.config.settings import settings
from src.core.exceptions import InputError, OutputError
from src.models.system import LtiSystem
from src.models.table import IntegralTable, TimeGrid

CACHE_MAGIC = b"STCTBL"
CACHE_VERSION = 1
CACHE_HEADER = struct.Struct("<6sHIIIId")
CACHE_SUFFIX = ".stctbl"


def _kernel_rates(E: np.ndarray, G: np.ndarray, A, B, Q, R):
    """Right-hand side at one RK stage; the H rates depend only on (E, G)."""
    GB = G @ B
    QE = Q @ E
    return (
        A @ E,
        E,
        E.T @ QE,
        QE.T @ GB,
        GB.T @ Q @ GB + R,
    )


def build_table(system: LtiSystem, grid: TimeGrid, substeps: Optional[int] = None) -> IntegralTable:
    """
    Integrate the kernel ODEs over the grid.

    Args:
        system: plant and weights
        grid: output grid; the internal step is grid.step / substeps
        substeps: RK4 steps per grid step (settings.rk4_substeps by default)
    """
    substeps = int(substeps or settings.rk4_substeps)
    if substeps < 1:
        raise InputError("substeps must be at least 1", {"substeps": substeps})

    n, m = system.n, system.m
    coeffs = (system.A, system.B, system.Q, system.R)
    h = grid.step / substeps

    E_tab = np.empty((grid.count, n, n))
    G_tab = np.empty((grid.count, n, n))
    H0_tab = np.empty((grid.count, n, n))
    H1_tab = np.empty((grid.count, n, m))
    H2_tab = np.empty((grid.count, m, m))

    E = np.eye(n)
    G = np.zeros((n, n))
    H0 = np.zeros((n, n))
    H1 = np.zeros((n, m))
    H2 = np.zeros((m, m))
    E_tab[0], G_tab[0], H0_tab[0], H1_tab[0], H2_tab[0] = E, G, H0, H1, H2

    for i in range(1, grid.count):
        for _ in range(substeps):
            k1 = _kernel_rates(E, G, *coeffs)
            k2 = _kernel_rates(E + 0.5 * h * k1[0], G + 0.5 * h * k1[1], *coeffs)
            k3 = _kernel_rates(E + 0.5 * h * k2[0], G + 0.5 * h * k2[1], *coeffs)
            k4 = _kernel_rates(E + h * k3[0], G + h * k3[1], *coeffs)
            incr = [(a + 2.0 * b + 2.0 * c + d) * (h / 6.0) for a, b, c, d in zip(k1, k2, k3, k4)]
            E = E + incr[0]
            G = G + incr[1]
            H0 = H0 + incr[2]
            H1 = H1 + incr[3]
            H2 = H2 + incr[4]
        E_tab[i] = E
        G_tab[i] = G
        H0_tab[i] = 0.5 * (H0 + H0.T)
        H1_tab[i] = H1
        H2_tab[i] = 0.5 * (H2 + H2.T)

    logger.debug(f"Built integral table n={n} m={m} count={grid.count} step={grid.step} substeps={substeps}")
    return IntegralTable(grid=grid, E=E_tab, G=G_tab, H0=H0_tab, H1=H1_tab, H2=H2_tab)


class TableCache:
    """
    Directory of binary table files keyed by a hash of the system and grid.

    Files are written to a temporary name and moved into place, so several
    sweep workers can share one directory.
    """

    def __init__(self, directory: Optional[str] = None):
        directory = settings.table_cache_dir if directory is None else directory
        self.directory = Path(directory) if directory else None
        self._stats: Dict[str, int] = {"hits": 0, "misses": 0, "writes": 0}

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    @staticmethod
    def key(system: LtiSystem, grid: TimeGrid, substeps: int) -> str:
        digest = hashlib.sha256()
        for arr in (system.A, system.B, system.Q, system.R):
            digest.update(struct.pack("<II", *arr.shape))
            digest.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        digest.update(struct.pack("<dIII", grid.step, grid.count, substeps, CACHE_VERSION))
        return digest.hexdigest()

    def path_for(self, system: LtiSystem, grid: TimeGrid, substeps: int) -> Path:
        return self.directory / f"{self.key(system, grid, substeps)}{CACHE_SUFFIX}"

    def load(self, system: LtiSystem, grid: TimeGrid, substeps: int) -> Optional[IntegralTable]:
        """Return the cached table or None when absent or unreadable."""
        if not self.enabled:
            return None
        path = self.path_for(system, grid, substeps)
        if not path.exists():
            self._stats["misses"] += 1
            return None
        try:
            table = read_table(path)
        except (OSError, ValueError) as e:
            logger.warning(f"Ignoring unreadable table cache {path.name}: {e}")
            self._stats["misses"] += 1
            return None
        if (table.n, table.m) != (system.n, system.m) or table.grid != grid:
            logger.warning(f"Table cache {path.name} does not match the requested grid")
            self._stats["misses"] += 1
            return None
        self._stats["hits"] += 1
        return table

    def store(self, table: IntegralTable, system: LtiSystem, substeps: int) -> Optional[Path]:
        if not self.enabled:
            return None
        path = self.path_for(system, table.grid, substeps)
        write_table(table, path, substeps)
        self._stats["writes"] += 1
        return path

    def get_or_build(self, system: LtiSystem, grid: TimeGrid, substeps: Optional[int] = None) -> IntegralTable:
        substeps = int(substeps or settings.rk4_substeps)
        table = self.load(system, grid, substeps)
        if table is not None:
            logger.debug("Integral table served from cache")
            return table
        table = build_table(system, grid, substeps)
        try:
            self.store(table, system, substeps)
        except OutputError as e:
            logger.warning(f"Table cache not written: {e.message}")
        return table

    def get_stats(self) -> Dict[str, int]:
        return dict(self._stats)


def write_table(table: IntegralTable, path: Path, substeps: int) -> None:
    """Write a table atomically in the versioned little-endian format."""
    path = Path(path)
    header = CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.n, table.m,
                               table.grid.count, substeps, table.grid.step)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header)
                for arr in (table.E, table.G, table.H0, table.H1, table.H2):
                    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        raise OutputError(f"Cannot write table cache {path}: {e}") from e


def read_table(path: Path) -> IntegralTable:
    """Read a table written by write_table. Raises ValueError on a bad file."""
    raw = Path(path).read_bytes()
    if len(raw) < CACHE_HEADER.size:
        raise ValueError("truncated header")
    magic, version, n, m, count, _substeps, step = CACHE_HEADER.unpack_from(raw, 0)
    if magic != CACHE_MAGIC:
        raise ValueError("not a table file")
    if version != CACHE_VERSION:
        raise ValueError(f"unsupported table version {version}")

    shapes = [(count, n, n), (count, n, n), (count, n, n), (count, n, m), (count, m, m)]
    body = np.frombuffer(raw, dtype="<f8", offset=CACHE_HEADER.size)
    expected = sum(int(np.prod(s)) for s in shapes)
    if body.size != expected:
        raise ValueError(f"expected {expected} values, found {body.size}")

    arrays = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(body[offset:offset + size].reshape(shape).astype(float))
        offset += size
    return IntegralTable(TimeGrid(step=step, count=count), *arrays)
