"""Picard iteration for ``X_t = h + int sigma(s, X_s) dB + int f(s, X_s) ds``.

The operator is applied pathwise on a fixed Brownian ensemble with the
initial condition sampled once per solve. Distances between iterates use the
sup-over-time L² norm, ``max_j (E|X_{t_j}|^2)^{1/2}``.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .calculus import AdaptedProcess, NormEstimate, _check_ensemble, sup_l2_norm, sup_l2_value
from .conditions import UNAVAILABLE, check_banach, check_schauder
from .errors import ShapeMismatch

__all__ = [
    "SolveResult",
    "apply_operator",
    "solve_picard",
    "euler_maruyama",
    "residual",
    "contraction_ratio",
    "contraction_probe",
    "equicontinuity_probe",
    "modulus_bound",
    "random_ball_process",
]


@dataclass
class SolveResult:
    solution: AdaptedProcess
    iterations: int
    converged: bool
    history: list
    final_residual: NormEstimate
    empirical_rate: float | None
    theoretical_k: float | None
    h_samples: np.ndarray = field(repr=False)
    residual_history: list = field(default_factory=list, repr=False)
    elapsed_ms: list = field(default_factory=list, repr=False)
    solution_norm: float = math.nan
    damping: float = 1.0

    @property
    def ratios(self):
        """``history[n] / history[n-1]`` for every consecutive pair."""
        h = np.asarray(self.history)
        with np.errstate(divide="ignore", invalid="ignore"):
            return h[1:] / h[:-1]

    def history_rows(self):
        """``(iter, update_norm, residual, elapsed_ms)`` per iteration."""
        return [
            (n + 1, upd, res, ms)
            for n, (upd, res, ms) in enumerate(zip(self.history, self.residual_history, self.elapsed_ms))
        ]


def _h_array(h_samples, n_paths):
    h = np.asarray(h_samples, dtype=np.float64)
    if h.ndim == 0:
        h = np.full(n_paths, float(h))
    if h.shape != (n_paths,):
        raise ShapeMismatch(f"need {n_paths} initial values, got shape {h.shape}")
    return h


def _apply_values(problem, values, ensemble, h):
    return _apply_rows(problem, values, ensemble.increments, ensemble.grid, h)


def _apply_rows(problem, values, increments, grid, h):
    t = grid.nodes[:-1]
    xl = values[:, :-1]
    out = np.empty((values.shape[0], grid.m + 1))
    with np.errstate(over="ignore", invalid="ignore"):
        drift = np.asarray(problem.drift(t, xl), dtype=np.float64) * grid.dt
        step = np.multiply(problem.diffusion(t, xl), increments)
        step += drift
        del drift
        out[:, 0] = h
        np.cumsum(step, axis=1, out=out[:, 1:])
        out[:, 1:] += h[:, None]
    return out


def apply_operator(problem, x, ensemble, h_samples):
    """``(A x)_j = h + sum_{i<j} sigma(t_i, x_i) dB_i + sum_{i<j} f(t_i, x_i) dt``."""
    _check_ensemble(x, ensemble)
    h = _h_array(h_samples, ensemble.n_paths)
    return AdaptedProcess(ensemble.grid, _apply_values(problem, x.values, ensemble, h))


def residual(problem, x, ensemble, h_samples):
    """Fixed-point defect ``sup-L2(A x - x)``."""
    return sup_l2_norm(apply_operator(problem, x, ensemble, h_samples) - x)


def euler_maruyama(problem, ensemble, h_samples):
    """Explicit recursion ``X_{j+1} = X_j + f dt + sigma dB`` from ``X_0 = h``."""
    grid = ensemble.grid
    h = _h_array(h_samples, ensemble.n_paths)
    t = grid.nodes
    out = np.empty((ensemble.n_paths, grid.m + 1))
    out[:, 0] = h
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(grid.m):
            xj = out[:, j]
            out[:, j + 1] = (
                xj + problem.drift(t[j], xj) * grid.dt + problem.diffusion(t[j], xj) * ensemble.increments[:, j]
            )
    return AdaptedProcess(grid, out)


def _empirical_rate(history):
    """Geometric fit ``history[n] ~ C rate^n`` over the tail after the first update."""
    h = np.asarray(history[1:], dtype=np.float64)
    h = h[h > 0]
    if len(history) < 4 or len(h) < 2:
        return None
    slope = np.polyfit(np.arange(len(h)), np.log(h), 1)[0]
    return float(math.exp(slope))


def solve_picard(
    problem,
    ensemble,
    tol=1e-6,
    max_iter=50,
    initial="h",
    seed_h=0,
    *,
    h_samples=None,
    damping=1.0,
):
    """Iterate ``X <- (1 - damping) X + damping A X`` until the update is small.

    Parameters
    ----------
    initial : {"h", "zero"} or AdaptedProcess
        Starting iterate: the constant-in-time ``h`` process, zero, or a
        given process (warm start).
    seed_h : int
        Seed for sampling ``h`` when ``h_samples`` is not given.
    damping : float
        Relaxation weight in ``(0, 1]``. 1 is plain Picard iteration.

    Non-convergence is reported by ``converged=False``; only numeric
    failures raise.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    if not 0 < damping <= 1:
        raise ValueError(f"damping must be in (0, 1], got {damping}")
    grid, n = ensemble.grid, ensemble.n_paths
    if h_samples is None:
        h_samples = problem.h.sample(n, seed_h)
    h = _h_array(h_samples, n)

    if isinstance(initial, AdaptedProcess):
        _check_ensemble(initial, ensemble)
        x = initial
    elif initial == "h":
        x = AdaptedProcess(grid, np.repeat(h[:, None], grid.m + 1, axis=1))
    elif initial == "zero":
        x = AdaptedProcess.constant(grid, n, 0.0)
    else:
        raise ValueError(f"unknown initial iterate {initial!r}")

    history, residuals, elapsed = [], [], []
    converged = False
    iterations = 0
    start = time.perf_counter()
    for iterations in range(1, max_iter + 1):
        ax = apply_operator(problem, x, ensemble, h)
        res = sup_l2_norm(ax - x).value
        if damping == 1.0:
            x = ax
        else:
            x = AdaptedProcess(grid, (1.0 - damping) * x.values + damping * ax.values)
        update = damping * res
        history.append(update)
        residuals.append(res)
        elapsed.append((time.perf_counter() - start) * 1e3)
        if update <= tol:
            converged = True
            break

    banach = check_banach(problem)
    theoretical_k = None if banach.verdict == UNAVAILABLE else banach.intermediates["k"]
    return SolveResult(
        solution=x,
        iterations=iterations,
        converged=converged,
        history=history,
        final_residual=residual(problem, x, ensemble, h),
        empirical_rate=_empirical_rate(history),
        theoretical_k=theoretical_k,
        h_samples=h,
        residual_history=residuals,
        elapsed_ms=elapsed,
        solution_norm=sup_l2_norm(x).value,
        damping=damping,
    )


# --- diagnostics ------------------------------------------------------------

# paths per block in contraction_ratio
PROBE_BLOCK = 256


def _basis(ensemble):
    """Adapted building blocks for random ball elements, each of unit sup-L2.

    Returned stacked as an array of shape ``(n_blocks, n_paths, m + 1)``.
    """
    grid = ensemble.grid
    t = grid.nodes
    tau = (t - grid.a) / (grid.b - grid.a)
    n = ensemble.n_paths
    bm = ensemble.values() / math.sqrt(grid.b - grid.a)
    blocks = {
        "one": np.ones_like(tau),
        "ramp": tau,
        "decay": 1.0 - tau,
        "brownian": bm,
        "chaos2": (bm * bm - tau) / math.sqrt(2.0),
    }
    out = np.empty((len(blocks), n, grid.m + 1))
    for k, v in enumerate(blocks.values()):
        out[k] = v
        out[k] /= sup_l2_value(out[k])
    return out


def random_ball_process(ensemble, r, rng, basis=None):
    """A random adapted process with ``sup-L2`` norm in ``[0.1 r, r)``.

    Built as a random mixture of deterministic profiles (constant, ramps, a
    sinusoid) and Brownian functionals (``B_t``, ``B_t^2 - t``), then rescaled
    on this ensemble to a random fraction of ``r``.
    """
    if basis is None:
        basis = _basis(ensemble)
    grid = ensemble.grid
    tau = (grid.nodes - grid.a) / (grid.b - grid.a)
    k = rng.integers(1, 4)
    wave = np.sin(2 * math.pi * k * tau + rng.uniform(0, 2 * math.pi))
    weights = rng.normal(size=len(basis))
    values = np.tensordot(weights, basis, axes=1)
    values += rng.normal() * wave[None, :]
    norm = sup_l2_value(values)
    target = r * rng.uniform(0.1, 1.0)
    if norm == 0.0:
        return AdaptedProcess.constant(grid, ensemble.n_paths, 0.0)
    values *= target / norm
    return AdaptedProcess(grid, values)


def contraction_ratio(problem, ensemble, x, y):
    """``sup-L2(A x - A y) / sup-L2(x - y)``; the initial condition cancels."""
    _check_ensemble(x, ensemble)
    _check_ensemble(y, ensemble)
    n, grid = ensemble.n_paths, ensemble.grid
    num_sq = np.zeros(grid.m + 1)
    den_sq = np.zeros(grid.m + 1)
    # row blocks keep the working set in cache; the ratio is unchanged
    for p0 in range(0, n, PROBE_BLOCK):
        p1 = min(p0 + PROBE_BLOCK, n)
        xv, yv, dw = x.values[p0:p1], y.values[p0:p1], ensemble.increments[p0:p1]
        zero = np.zeros(p1 - p0)
        d = xv - yv
        den_sq += np.einsum("ij,ij->j", d, d)
        d = _apply_rows(problem, xv, dw, grid, zero)
        d -= _apply_rows(problem, yv, dw, grid, zero)
        num_sq += np.einsum("ij,ij->j", d, d)
    den = math.sqrt(float(np.max(den_sq)) / n)
    if den == 0.0:
        return None
    return math.sqrt(float(np.max(num_sq)) / n) / den


def contraction_probe(problem, ensemble, n_trials, r, seed):
    """Largest contraction ratio over ``n_trials`` random pairs in the ``r``-ball."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    rng = _rng.generator(seed, _rng.STREAM_PROBE)
    basis = _basis(ensemble)
    worst = 0.0
    for _ in range(n_trials):
        x = random_ball_process(ensemble, r, rng, basis)
        y = random_ball_process(ensemble, r, rng, basis)
        ratio = contraction_ratio(problem, ensemble, x, y)
        if ratio is not None:
            worst = max(worst, ratio)
    return worst


def modulus_bound(problem, r):
    """``2 (1 + b - a) d^2``, the bound on ``||A X_{t1} - A X_{t2}||^2 / |t1 - t2|``."""
    report = check_schauder(problem, r)
    if report.verdict == UNAVAILABLE:
        return None
    length = problem.b - problem.a
    return 2 * (1 + length) * report.intermediates["d"] ** 2


def equicontinuity_probe(problem, ensemble, x, r):
    """Largest ``||A X_{t_{j+1}} - A X_{t_j}||^2 / dt`` over adjacent grid pairs.

    Returns a :class:`NormEstimate` whose ``value`` is the modulus and whose
    ``std_error`` is the Monte Carlo error at the attaining pair.
    """
    norm = sup_l2_norm(x).value
    if norm > r * (1 + 1e-12):
        raise ValueError(f"process has sup-L2 norm {norm} outside the ball of radius {r}")
    ax = apply_operator(problem, x, ensemble, np.zeros(ensemble.n_paths))
    diffs = np.diff(ax.values, axis=1)
    sq = diffs * diffs / ensemble.grid.dt
    col = np.mean(sq, axis=0)
    j = int(np.argmax(col))
    n = ensemble.n_paths
    se = float(np.std(sq[:, j], ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return NormEstimate(float(col[j]), se, n, se, j)
