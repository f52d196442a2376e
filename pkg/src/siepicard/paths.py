"""Brownian path ensembles on uniform time grids.

Increments are the canonical storage; path values ``B(t_j)`` are prefix sums
with ``B(a) = 0``. Each increment is addressed by ``(seed, path, step)`` in a
counter-based stream, so the same inputs give bit-identical ensembles no
matter how many worker threads generate them.
"""

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _rng
from .errors import InvalidInterval, InvalidSteps, SieError

__all__ = [
    "TimeGrid",
    "BrownianEnsemble",
    "make_grid",
    "sample_brownian",
    "refine_brownian",
    "dump_ensemble",
    "load_ensemble",
]

_BLOCK_PATHS = 1024

MAGIC = b"SIEB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIddQQQ")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``a = t_0 < t_1 < ... < t_m = b``."""

    a: float
    b: float
    m: int

    @property
    def dt(self):
        return (self.b - self.a) / self.m

    @cached_property
    def nodes(self):
        nodes = self.a + (self.b - self.a) * (np.arange(self.m + 1) / self.m)
        nodes[0] = self.a
        nodes[-1] = self.b
        nodes.setflags(write=False)
        return nodes


def make_grid(a, b, m):
    """Build a uniform grid with ``m`` steps on ``[a, b]``.

    >>> make_grid(0, 1, 4).nodes.tolist()
    [0.0, 0.25, 0.5, 0.75, 1.0]
    """
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidInterval(f"interval endpoints must be finite, got [{a}, {b}]")
    if not a < b:
        raise InvalidInterval(f"need a < b, got [{a}, {b}]")
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise InvalidSteps(f"number of steps must be a positive integer, got {m!r}")
    return TimeGrid(a, b, int(m))


@dataclass(frozen=True, eq=False)
class BrownianEnsemble:
    """``n_paths`` Brownian paths sharing one grid, stored as increments.

    ``increments[p, j]`` is ``B(t_{j+1}) - B(t_j)`` on path ``p``. The array is
    read-only; build a new ensemble to perturb it.
    """

    grid: TimeGrid
    n_paths: int
    increments: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=np.float64)
        if inc.shape != (self.n_paths, self.grid.m):
            raise SieError(
                f"increments shape {inc.shape} does not match "
                f"({self.n_paths}, {self.grid.m})"
            )
        if inc.flags.writeable:
            inc = inc.view()
            inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    def values(self):
        """Path values ``B(t_j)``, shape ``(n_paths, m + 1)`` with ``B(a) = 0``."""
        out = np.zeros((self.n_paths, self.grid.m + 1))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        return out

    def terminal(self):
        """``B(b)`` for every path."""
        return self.increments.sum(axis=1)

    def with_increments(self, increments):
        """Same grid and seed, different increments (used for perturbation tests)."""
        return BrownianEnsemble(self.grid, self.n_paths, np.array(increments), self.seed)


def _fill_block(out, grid, seed, p0, p1):
    m = grid.m
    z = _rng.normals(seed, _rng.STREAM_BROWNIAN, p0 * m, (p1 - p0) * m)
    z *= math.sqrt(grid.dt)
    out[p0:p1] = z.reshape(p1 - p0, m)


def sample_brownian(grid, n_paths, seed, *, workers=1):
    """Draw an ensemble of ``n_paths`` Brownian paths on ``grid``.

    Parameters
    ----------
    grid : TimeGrid
    n_paths : int
        Number of independent paths, at least 1.
    seed : int
        Unsigned 64-bit master seed.
    workers : int
        Threads used for generation. The output does not depend on it.
    """
    if isinstance(n_paths, bool) or int(n_paths) != n_paths or n_paths < 1:
        raise ValueError(f"n_paths must be a positive integer, got {n_paths!r}")
    n_paths = int(n_paths)
    seed = _rng.check_seed(seed)
    out = np.empty((n_paths, grid.m))
    blocks = [(p0, min(p0 + _BLOCK_PATHS, n_paths)) for p0 in range(0, n_paths, _BLOCK_PATHS)]
    if workers <= 1 or len(blocks) == 1:
        for p0, p1 in blocks:
            _fill_block(out, grid, seed, p0, p1)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda blk: _fill_block(out, grid, seed, *blk), blocks))
    return BrownianEnsemble(grid, n_paths, out, seed)


def refine_brownian(ensemble, factor, seed):
    """Insert Brownian-bridge points, splitting every step into ``factor`` steps.

    Within one coarse step of length ``dt`` with increment ``w``, draw
    ``z_k ~ N(0, dt/factor)`` and subtract the mean defect
    ``(sum(z) - w) / factor`` from each. This is the exact conditional law of
    the fine increments given their sum. The last fine increment is then set
    to ``w`` minus the others so pairs telescope back to the coarse increment.
    """
    if isinstance(factor, bool) or int(factor) != factor or factor < 2:
        raise ValueError(f"refinement factor must be an integer >= 2, got {factor!r}")
    factor = int(factor)
    seed = _rng.check_seed(seed)
    coarse = ensemble.grid
    fine_grid = TimeGrid(coarse.a, coarse.b, coarse.m * factor)
    n, m = ensemble.n_paths, coarse.m
    stream = _rng.bridge_stream(m, factor)
    z = _rng.normals(seed, stream, 0, n * m * factor).reshape(n, m, factor)
    z *= math.sqrt(fine_grid.dt)
    w = ensemble.increments
    z -= ((z.sum(axis=2) - w) / factor)[:, :, None]
    z[:, :, -1] = w - z[:, :, :-1].sum(axis=2)
    return BrownianEnsemble(fine_grid, n, z.reshape(n, m * factor), seed)


def dump_ensemble(ensemble, path):
    """Write ``ensemble`` in the little-endian ``SIEB`` binary format."""
    g = ensemble.grid
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, g.a, g.b, g.m, ensemble.n_paths, ensemble.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ensemble.increments, dtype="<f8").tobytes())


def load_ensemble(path):
    """Read an ensemble written by :func:`dump_ensemble`."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise SieError(f"{path}: truncated header")
        magic, version, a, b, m, n_paths, seed = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SieError(f"{path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise SieError(f"{path}: unsupported format version {version}")
        payload = fh.read()
    expected = 8 * m * n_paths
    if len(payload) != expected:
        raise SieError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    inc = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(n_paths, m)
    return BrownianEnsemble(make_grid(a, b, m), int(n_paths), inc, int(seed))
