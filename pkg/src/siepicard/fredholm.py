"""Deterministic integral equation ``u(x) = lam * int_a^b F(x, y, u(y)) dy``.

The integral is discretised with the composite trapezoid rule on a uniform
grid and solved by plain fixed-point iteration from ``u = 0``.

Kernel registry (``p``, ``q`` are time functions from ``coefficients``):

* ``SeparableKernel(p, q)``         ``p(x) q(y)``
* ``AffineKernel(p, q, gamma)``     ``p(x) q(y) + gamma * u``
* ``SineKernel(p, q)``              ``p(x) q(y) sin(u)``

Descriptors: ``separable:(P):(Q)``, ``affine:(P):(Q):GAMMA``, ``sine:(P):(Q)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import _float, _split_top, _unwrap, parse_time_function
from .errors import DescriptorError, InvalidInterval, NumericFailure, ShapeMismatch

__all__ = [
    "SeparableKernel",
    "AffineKernel",
    "SineKernel",
    "FredholmProblem",
    "GridFunction",
    "FredholmResult",
    "quadrature_nodes",
    "apply_fredholm",
    "solve_fredholm",
    "parse_kernel",
]


@dataclass(frozen=True)
class SeparableKernel:
    p: object
    q: object

    def __call__(self, x, y, u):
        return self.p(x) * self.q(y) + 0.0 * u

    def max_abs(self, a, b, r):
        return self.p.max_abs(a, b) * self.q.max_abs(a, b)

    def u_lipschitz(self, a, b):
        return 0.0

    def descriptor(self):
        return f"separable:({self.p.descriptor()}):({self.q.descriptor()})"


@dataclass(frozen=True)
class AffineKernel:
    p: object
    q: object
    gamma: float

    def __call__(self, x, y, u):
        return self.p(x) * self.q(y) + self.gamma * u

    def max_abs(self, a, b, r):
        # the sign of u is free, so the two maxima add
        return self.p.max_abs(a, b) * self.q.max_abs(a, b) + abs(self.gamma) * r

    def u_lipschitz(self, a, b):
        return abs(float(self.gamma))

    def descriptor(self):
        return f"affine:({self.p.descriptor()}):({self.q.descriptor()}):{float(self.gamma)!r}"


@dataclass(frozen=True)
class SineKernel:
    p: object
    q: object

    def __call__(self, x, y, u):
        return self.p(x) * self.q(y) * np.sin(u)

    def max_abs(self, a, b, r):
        return self.p.max_abs(a, b) * self.q.max_abs(a, b) * math.sin(min(r, math.pi / 2))

    def u_lipschitz(self, a, b):
        return self.p.max_abs(a, b) * self.q.max_abs(a, b)

    def descriptor(self):
        return f"sine:({self.p.descriptor()}):({self.q.descriptor()})"


def parse_kernel(text):
    whole = text
    kind, _, rest = _unwrap(text).partition(":")
    parts = _split_top(rest) if rest else []
    kind = kind.strip()
    if kind in ("separable", "sine") and len(parts) == 2:
        p, q = (parse_time_function(t) for t in parts)
        return SeparableKernel(p, q) if kind == "separable" else SineKernel(p, q)
    if kind == "affine" and len(parts) == 3:
        p, q = (parse_time_function(t) for t in parts[:2])
        return AffineKernel(p, q, _float(parts[2], whole))
    raise DescriptorError(f"unknown kernel {whole!r}")


# relative update size below which successive-update ratios are rounding noise
RATE_FLOOR = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class FredholmProblem:
    a: float
    b: float
    lam: float
    kernel: object

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidInterval(f"need finite a < b, got [{self.a}, {self.b}]")


@dataclass(frozen=True, eq=False)
class GridFunction:
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if nodes.shape != values.shape or nodes.ndim != 1:
            raise ShapeMismatch(f"nodes {nodes.shape} and values {values.shape} differ")
        bad = np.flatnonzero(~np.isfinite(values))
        if len(bad):
            raise NumericFailure(0, bad[0])
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def max_norm(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class FredholmResult:
    solution: GridFunction
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    residual: float = math.nan
    in_ball: bool | None = None
    diverged: bool = False

    @property
    def ratios(self):
        """Successive update-norm ratios ``history[n] / history[n-1]``."""
        h = np.asarray(self.history)
        with np.errstate(divide="ignore", invalid="ignore"):
            return h[1:] / h[:-1]

    @property
    def empirical_rate(self):
        """Largest update ratio; ``None`` with fewer than two usable updates.

        Ratios whose numerator is below ``sqrt(eps) * max|u|`` are dropped:
        there the update is dominated by rounding in ``u`` and the ratio says
        nothing about the map.
        """
        h = np.asarray(self.history)
        floor = RATE_FLOOR * max(self.solution.max_norm(), np.finfo(float).tiny)
        r = self.ratios[h[1:] > floor]
        r = r[np.isfinite(r)]
        return float(np.max(r)) if len(r) else None


def quadrature_nodes(a, b, n_quad):
    if n_quad < 1:
        raise ValueError(f"n_quad must be at least 1, got {n_quad}")
    nodes = a + (b - a) * (np.arange(n_quad + 1) / n_quad)
    nodes[-1] = b
    return nodes


def _trapezoid_weights(a, b, n_quad):
    w = np.full(n_quad + 1, (b - a) / n_quad)
    w[0] = w[-1] = 0.5 * (b - a) / n_quad
    return w


def apply_fredholm(problem, u, n_quad):
    """``lam * sum_j w_j F(x_i, y_j, u(y_j))`` at every node ``x_i``."""
    nodes = quadrature_nodes(problem.a, problem.b, n_quad)
    if u.nodes.shape != nodes.shape or not np.array_equal(u.nodes, nodes):
        raise ShapeMismatch(f"u is not defined on the {n_quad}-panel trapezoid nodes")
    w = _trapezoid_weights(problem.a, problem.b, n_quad)
    kernel = problem.kernel(nodes[:, None], nodes[None, :], u.values[None, :])
    return GridFunction(nodes, problem.lam * (kernel @ w))


def solve_fredholm(problem, n_quad, tol, max_iter=500, r=None):
    """Fixed-point iteration ``u <- apply_fredholm(u)`` from ``u = 0``.

    Stops once the max-norm update is at most ``tol``. Non-convergence is
    reported through ``converged=False``, never raised. If ``r`` is given the
    result records whether the solution lies in the ball ``max|u| <= r``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    nodes = quadrature_nodes(problem.a, problem.b, n_quad)
    u = GridFunction(nodes, np.zeros_like(nodes))
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                new = apply_fredholm(problem, u, n_quad)
        except NumericFailure:
            in_ball = None if r is None else False
            return FredholmResult(u, iterations, False, history, math.inf, in_ball, diverged=True)
        step = float(np.max(np.abs(new.values - u.values)))
        history.append(step)
        u = new
        if step <= tol:
            converged = True
            break
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            res = float(np.max(np.abs(apply_fredholm(problem, u, n_quad).values - u.values)))
    except NumericFailure:
        res = math.inf
    in_ball = None if r is None else bool(u.max_norm() <= r)
    return FredholmResult(u, iterations, converged, history, res, in_ball)
