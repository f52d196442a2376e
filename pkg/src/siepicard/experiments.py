"""Batch studies driven by the command line: the linear (GBM) equation and
the isometry integrand registry."""

import math
from dataclasses import dataclass

import numpy as np

from .calculus import AdaptedProcess, isometry_check
from .coefficients import Linear, Poly
from .conditions import InitialLaw, SieProblem
from .paths import make_grid, refine_brownian, sample_brownian
from .picard import solve_picard

__all__ = [
    "gbm_problem",
    "gbm_exact",
    "gbm_parameters",
    "StrongErrorRow",
    "strong_error_study",
    "moment_table",
    "ISOMETRY_INTEGRANDS",
    "isometry_integrand",
    "run_isometry",
]


def gbm_problem(u, sigma, x0=1.0, a=0.0, b=1.0):
    """``X_t = x0 + int u X ds + int sigma X dB`` as a registry problem."""
    return SieProblem(a, b, InitialLaw.constant(x0), Linear(Poly((u,))), Linear(Poly((sigma,))))


def gbm_parameters(problem):
    """Recover ``(u, sigma, x0)`` from a problem, or raise ``ValueError``."""
    drift, diffusion = problem.drift, problem.diffusion
    for coef in (drift, diffusion):
        if not (isinstance(coef, Linear) and isinstance(coef.g, Poly) and len(coef.g.coeffs) == 1):
            raise ValueError("GBM study needs linear coefficients with constant time functions")
    if problem.h.kind != "constant":
        raise ValueError("GBM study needs a constant initial condition")
    return drift.g.coeffs[0], diffusion.g.coeffs[0], problem.h.params[0]


def gbm_exact(x0, u, sigma, t, brownian):
    """Pathwise solution ``x0 exp((u - sigma^2/2) t + sigma B_t)``."""
    return x0 * np.exp((u - 0.5 * sigma * sigma) * t + sigma * brownian)


@dataclass(frozen=True)
class StrongErrorRow:
    dt: float
    rms_error: float
    n_paths: int
    iterations: int
    converged: bool


def _slope(dts, errors):
    return float(np.polyfit(np.log2(dts), np.log2(errors), 1)[0])


def strong_error_study(
    problem,
    *,
    n_paths,
    seed,
    levels=(4, 5, 6, 7, 8),
    tol=1e-10,
    max_iter=100,
    workers=1,
):
    """Strong error at ``t = b`` on a bridge-coupled ladder ``dt = (b-a) 2^-level``.

    The coarsest ensemble is sampled directly and every finer one is a
    Brownian-bridge refinement of the previous, so all levels share the same
    ``B(b)`` and hence the same exact terminal value.
    """
    u, sigma, x0 = gbm_parameters(problem)
    levels = sorted(levels)
    ens = sample_brownian(make_grid(problem.a, problem.b, 2 ** levels[0]), n_paths, seed, workers=workers)
    terminal_b = ens.terminal()
    exact = gbm_exact(x0, u, sigma, problem.b - problem.a, terminal_b)
    rows = []
    for i, level in enumerate(levels):
        if i:
            ens = refine_brownian(ens, 2 ** (level - levels[i - 1]), (seed + level) % 2**64)
        res = solve_picard(problem, ens, tol, max_iter)
        err = res.solution.values[:, -1] - exact
        rows.append(
            StrongErrorRow(ens.grid.dt, float(np.sqrt(np.mean(err * err))), n_paths, res.iterations, res.converged)
        )
    slope = _slope([r.dt for r in rows], [r.rms_error for r in rows])
    return rows, slope


def moment_table(problem, solution):
    """Per-node first and second moments against ``x0 e^{ut}``, ``x0^2 e^{(2u+sigma^2)t}``."""
    u, sigma, x0 = gbm_parameters(problem)
    nodes = solution.grid.nodes
    t = nodes - problem.a
    v = solution.values
    n = v.shape[0]
    mean = v.mean(axis=0)
    mean_se = v.std(axis=0, ddof=1) / math.sqrt(n)
    sq = v * v
    second = sq.mean(axis=0)
    second_se = sq.std(axis=0, ddof=1) / math.sqrt(n)
    mean_exact = x0 * np.exp(u * t)
    second_exact = x0 * x0 * np.exp((2 * u + sigma * sigma) * t)
    return [
        (float(nodes[j]), float(mean[j]), float(mean_exact[j]), float(mean_se[j]),
         float(second[j]), float(second_exact[j]), float(second_se[j]))
        for j in range(len(t))
    ]


# --- isometry integrands ---------------------------------------------------

ISOMETRY_INTEGRANDS = ("one", "t", "B")


def isometry_integrand(name, ensemble):
    grid, n = ensemble.grid, ensemble.n_paths
    if name == "one":
        return AdaptedProcess.constant(grid, n, 1.0)
    if name == "t":
        return AdaptedProcess.deterministic(grid, n, lambda t: t)
    if name == "B":
        return AdaptedProcess(grid, ensemble.values())
    raise ValueError(f"unknown isometry integrand {name!r}; choose from {ISOMETRY_INTEGRANDS}")


def run_isometry(ensemble, names=ISOMETRY_INTEGRANDS, tolerance=0.02):
    return [(name, isometry_check(isometry_integrand(name, ensemble), ensemble, tolerance)) for name in names]
