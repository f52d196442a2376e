"""Discrete Itô and Lebesgue integrals and empirical L² norms.

All integrals use left-endpoint evaluation, so a value at grid index ``j``
only ever depends on increments with index ``< j``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericFailure, ShapeMismatch

__all__ = [
    "AdaptedProcess",
    "NormEstimate",
    "IsometryReport",
    "ito_integral",
    "lebesgue_integral",
    "l2_norm_at",
    "sup_l2_norm",
    "sup_l2_value",
    "l2ad_norm",
    "isometry_check",
]

# Relative comparisons in isometry_check fall back to this absolute scale
# when the right-hand side vanishes.
ISOMETRY_FLOOR = 1e-12


def _first_nonfinite(values):
    # one reduction pass; the full scan runs only when something is off
    if math.isfinite(float(np.add.reduce(values, axis=None))):
        return None
    bad = np.argwhere(~np.isfinite(values))
    return bad[0] if len(bad) else None


@dataclass(frozen=True, eq=False)
class AdaptedProcess:
    """Values ``X_t(omega)`` of one process on ``n_paths`` sample paths.

    ``values`` has shape ``(n_paths, m + 1)``; column ``j`` is the time
    ``grid.nodes[j]``. Construction raises :class:`NumericFailure` on the
    first NaN or infinity.
    """

    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.grid.m + 1:
            raise ShapeMismatch(
                f"process values must have shape (n_paths, {self.grid.m + 1}), got {values.shape}"
            )
        if values.shape[0] < 1:
            raise ShapeMismatch("process has no sample paths")
        bad = _first_nonfinite(values)
        if bad is not None:
            raise NumericFailure(bad[0], bad[1])
        object.__setattr__(self, "values", values)

    @property
    def n_paths(self):
        return self.values.shape[0]

    @classmethod
    def constant(cls, grid, n_paths, c):
        """The deterministic process identically equal to ``c``."""
        return cls(grid, np.broadcast_to(np.float64(c), (n_paths, grid.m + 1)))

    @classmethod
    def deterministic(cls, grid, n_paths, fn):
        """A process ``X_t = fn(t)`` that is the same on every path."""
        row = np.asarray(fn(grid.nodes), dtype=np.float64)
        return cls(grid, np.broadcast_to(row, (n_paths, grid.m + 1)))

    def __sub__(self, other):
        _check_pair(self, other)
        return AdaptedProcess(self.grid, self.values - other.values)

    def __add__(self, other):
        _check_pair(self, other)
        return AdaptedProcess(self.grid, self.values + other.values)

    def scaled(self, factor):
        return AdaptedProcess(self.grid, self.values * factor)


@dataclass(frozen=True)
class NormEstimate:
    """A Monte Carlo norm estimate.

    ``std_error`` is the standard error of ``value`` itself; ``sq_std_error``
    is the standard error of the underlying mean of squares.
    """

    value: float
    std_error: float
    n_paths: int
    sq_std_error: float = 0.0
    index: int | None = None


@dataclass(frozen=True)
class IsometryReport:
    lhs: float
    rhs: float
    rel_error: float
    passed: bool
    tolerance: float
    std_error: float
    lhs_std_error: float
    n_paths: int

    @property
    def z_score(self):
        """Discrepancy ``lhs - rhs`` in units of its paired standard error."""
        if self.std_error == 0.0:
            return 0.0 if self.lhs == self.rhs else math.inf
        return (self.lhs - self.rhs) / self.std_error


def _check_pair(x, y):
    if x.grid != y.grid or x.n_paths != y.n_paths:
        raise ShapeMismatch(
            f"processes differ: grid {x.grid} / {y.grid}, paths {x.n_paths} / {y.n_paths}"
        )


def _check_ensemble(process, ensemble):
    if process.grid != ensemble.grid or process.n_paths != ensemble.n_paths:
        raise ShapeMismatch(
            f"process on {process.grid} with {process.n_paths} paths does not match "
            f"ensemble on {ensemble.grid} with {ensemble.n_paths} paths"
        )


def _mean_se(samples):
    n = samples.shape[0]
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def ito_integral(integrand, ensemble):
    """Cumulative left-endpoint Itô integral ``int_a^{t_j} X dB``."""
    _check_ensemble(integrand, ensemble)
    n, m = ensemble.n_paths, ensemble.grid.m
    out = np.zeros((n, m + 1))
    np.cumsum(integrand.values[:, :-1] * ensemble.increments, axis=1, out=out[:, 1:])
    return AdaptedProcess(ensemble.grid, out)


def lebesgue_integral(integrand, grid):
    """Cumulative left Riemann sum ``int_a^{t_j} X ds``."""
    if integrand.grid != grid:
        raise ShapeMismatch(f"process grid {integrand.grid} does not match {grid}")
    out = np.zeros((integrand.n_paths, grid.m + 1))
    np.cumsum(integrand.values[:, :-1] * grid.dt, axis=1, out=out[:, 1:])
    return AdaptedProcess(grid, out)


def _norm_from_squares(squares, index=None):
    ms, ms_se = _mean_se(squares)
    value = math.sqrt(ms)
    # delta method: d sqrt(v) = dv / (2 sqrt(v))
    se = ms_se / (2.0 * value) if value > 0.0 else 0.0
    return NormEstimate(value, se, squares.shape[0], ms_se, index)


def l2_norm_at(process, j):
    """``(E|X_{t_j}|^2)^{1/2}`` estimated over paths."""
    m = process.grid.m
    if not 0 <= j <= m:
        raise IndexError(f"grid index {j} outside [0, {m}]")
    col = process.values[:, j]
    return _norm_from_squares(col * col, index=int(j))


def _column_mean_squares(values):
    n = values.shape[0]
    return np.einsum("ij,ij->j", values, values) / n


def sup_l2_value(values):
    """Point value of the sup-L2 norm of a raw ``(n_paths, m + 1)`` array."""
    return math.sqrt(float(np.max(_column_mean_squares(values))))


def sup_l2_norm(process):
    """``max_j (E|X_{t_j}|^2)^{1/2}``; the standard error is that of the argmax."""
    j = int(np.argmax(_column_mean_squares(process.values)))
    return l2_norm_at(process, j)


def l2ad_norm(process):
    """``sum_{j<m} E|X_{t_j}|^2 dt``, the discrete ``int_a^b E|X_t|^2 dt``.

    This is a squared quantity, reported with the standard error of the
    per-path sums.
    """
    v = process.values[:, :-1]
    per_path = np.einsum("ij,ij->i", v, v) * process.grid.dt
    value, se = _mean_se(per_path)
    return NormEstimate(value, se, process.n_paths, se)


def isometry_check(integrand, ensemble, tolerance, floor=ISOMETRY_FLOOR):
    """Compare ``E[(int f dB)^2]`` with ``E[int f^2 dt]`` on one ensemble.

    With left-endpoint sums the two estimators have identical expectation,
    so any gap is Monte Carlo error. ``std_error`` is the standard error of
    the paired per-path difference. ``passed`` is
    ``|lhs - rhs| <= tolerance * max(|rhs|, floor)``.
    """
    _check_ensemble(integrand, ensemble)
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    f = integrand.values[:, :-1]
    terminal = np.einsum("ij,ij->i", f, ensemble.increments)
    lhs_samples = terminal * terminal
    rhs_samples = np.einsum("ij,ij->i", f, f) * ensemble.grid.dt
    lhs, lhs_se = _mean_se(lhs_samples)
    rhs = float(np.mean(rhs_samples))
    _, diff_se = _mean_se(lhs_samples - rhs_samples)
    scale = max(abs(rhs), floor)
    gap = abs(lhs - rhs)
    return IsometryReport(
        lhs=lhs,
        rhs=rhs,
        rel_error=gap / scale,
        passed=gap <= tolerance * scale,
        tolerance=float(tolerance),
        std_error=diff_se,
        lhs_std_error=lhs_se,
        n_paths=ensemble.n_paths,
    )
