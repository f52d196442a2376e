"""Hypothesis checks for the existence and uniqueness theorems.

Four checks, each returning a :class:`ConditionReport` that carries every
intermediate quantity:

* ``check_schauder``          3 E[h^2] + 3 (1+b-a)(b-a) d^2 <= r^2
* ``check_banach``            2 c^2 (1+b-a)(b-a) < 1,  c = max(k1, k2)
* ``check_fredholm_schauder`` |lam| M <= r,  (b-a) M = max |F| over the r-ball
* ``check_fredholm_banach``   (b-a) |lam| L < 1,  L = sup |dF/du|

Inequalities are evaluated in floating point with a boundary allowance of a
few ulps (``BOUNDARY_RTOL``): a non-strict inequality whose sides agree to
rounding passes, a strict one fails.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .coefficients import ANALYTIC, HEURISTIC, estimate_bounds, lipschitz_constant, sup_bound
from .errors import BoundUnavailable, DescriptorError, InvalidInterval

__all__ = [
    "InitialLaw",
    "SieProblem",
    "ConditionReport",
    "check_schauder",
    "check_banach",
    "check_fredholm_schauder",
    "check_fredholm_banach",
    "min_radius",
    "parse_initial_law",
    "PASS",
    "PASS_HEURISTIC",
    "FAIL",
    "UNAVAILABLE",
]

PASS = "pass"
PASS_HEURISTIC = "pass_heuristic"
FAIL = "fail"
UNAVAILABLE = "unavailable"

BOUNDARY_RTOL = 4 * np.finfo(np.float64).eps

R_MAX = 1e6
RADIUS_TOL = 1e-9
HEURISTIC_SAMPLES = 100_000


def _holds(lhs, relation, rhs):
    slack = BOUNDARY_RTOL * abs(rhs)
    if relation == "<=":
        return lhs <= rhs + slack
    if relation == "<":
        return lhs < rhs - slack
    raise ValueError(f"unknown relation {relation!r}")


@dataclass(frozen=True)
class InitialLaw:
    """Law of the initial condition ``h``: constant, normal or lognormal.

    ``params`` are ``(x0,)``, ``(mean, var)`` or ``(mu, sigma2)`` where the
    lognormal is ``exp(N(mu, sigma2))``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        expected = {"constant": 1, "normal": 2, "lognormal": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown initial law {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != expected[self.kind]:
            raise ValueError(f"{self.kind} law takes {expected[self.kind]} parameters")
        if self.kind != "constant" and params[1] < 0:
            raise ValueError("variance parameter must be non-negative")
        object.__setattr__(self, "params", params)

    @classmethod
    def constant(cls, x0):
        return cls("constant", (x0,))

    @classmethod
    def normal(cls, mean, var):
        return cls("normal", (mean, var))

    @classmethod
    def lognormal(cls, mu, sigma2):
        return cls("lognormal", (mu, sigma2))

    @property
    def mean(self):
        if self.kind == "lognormal":
            mu, s2 = self.params
            return math.exp(mu + s2 / 2)
        return self.params[0]

    @property
    def second_moment(self):
        """``E[h^2]`` in closed form."""
        if self.kind == "constant":
            return self.params[0] ** 2
        if self.kind == "normal":
            mean, var = self.params
            return mean * mean + var
        mu, s2 = self.params
        return math.exp(2 * mu + 2 * s2)

    def sample(self, n, seed):
        """``n`` draws, one per path, from a stream reserved for ``h``."""
        if self.kind == "constant":
            return np.full(n, self.params[0])
        z = _rng.normals(seed, _rng.STREAM_INITIAL, 0, n)
        a, s2 = self.params
        if self.kind == "normal":
            return a + math.sqrt(s2) * z
        return np.exp(a + math.sqrt(s2) * z)

    def descriptor(self):
        return f"{self.kind}:" + ",".join(repr(p) for p in self.params)


def parse_initial_law(text):
    kind, _, rest = text.strip().partition(":")
    try:
        params = tuple(float(tok) for tok in rest.split(",")) if rest.strip() else ()
        return InitialLaw(kind.strip(), params)
    except ValueError as exc:
        raise DescriptorError(f"bad initial law {text!r}: {exc}") from None


@dataclass(frozen=True)
class SieProblem:
    """``X_t = h + int_a^t sigma(s, X_s) dB(s) + int_a^t f(s, X_s) ds``."""

    a: float
    b: float
    h: InitialLaw
    drift: object
    diffusion: object

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidInterval(f"need finite a < b, got [{self.a}, {self.b}]")

    @property
    def length(self):
        return self.b - self.a


@dataclass
class ConditionReport:
    theorem: str
    verdict: str
    intermediates: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    relation: str = "<="
    message: str = ""

    @property
    def passed(self):
        return self.verdict in (PASS, PASS_HEURISTIC)

    @property
    def boundary(self):
        """True when the two sides agree to within the rounding allowance."""
        lhs, rhs = self.intermediates.get("lhs"), self.intermediates.get("rhs")
        if lhs is None or rhs is None:
            return False
        return abs(lhs - rhs) <= BOUNDARY_RTOL * abs(rhs)

    def recheck(self):
        """Recompute the verdict from the reported intermediates alone."""
        if self.verdict == UNAVAILABLE:
            return UNAVAILABLE
        holds = _holds(self.intermediates["lhs"], self.relation, self.intermediates["rhs"])
        if not holds:
            return FAIL
        return PASS_HEURISTIC if self.inputs.get("provenance") == HEURISTIC else PASS

    def intermediates_text(self):
        return ";".join(f"{k}={v!r}" for k, v in self.intermediates.items())

    def to_text(self):
        lines = [f"theorem={self.theorem}", f"verdict={self.verdict}", f"relation={self.relation}"]
        lines += [f"{k}={v}" for k, v in self.inputs.items()]
        lines += [f"{k}={v!r}" for k, v in self.intermediates.items()]
        if self.message:
            lines.append(f"message={self.message}")
        return "\n".join(lines) + "\n"

    def to_csv_row(self):
        return [self.theorem, self.verdict, self.intermediates_text()]


def _verdict(lhs, relation, rhs, provenance):
    if not _holds(lhs, relation, rhs):
        return FAIL
    return PASS_HEURISTIC if provenance == HEURISTIC else PASS


def _sup(coef, r, a, b, allow_heuristic, seed):
    value = sup_bound(coef, r, a, b)
    if value is not None:
        return value, ANALYTIC
    if not allow_heuristic:
        return None, None
    return estimate_bounds(coef, a, b, r, HEURISTIC_SAMPLES, seed).sup_on_ball, HEURISTIC


def _lip(coef, a, b, allow_heuristic, seed, r):
    value = lipschitz_constant(coef, a, b)
    if value is not None:
        return value, ANALYTIC
    if not allow_heuristic:
        return None, None
    return estimate_bounds(coef, a, b, r, HEURISTIC_SAMPLES, seed).lipschitz, HEURISTIC


def _worst(*provenances):
    return HEURISTIC if HEURISTIC in provenances else ANALYTIC


def check_schauder(problem, r, *, allow_heuristic=False, seed=0):
    """Existence condition ``3 E[h^2] + 3 (1+b-a)(b-a) d^2 <= r^2``.

    ``d`` is the larger of the two coefficient sups over ``|x| <= r``.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    a, b = problem.a, problem.b
    d_f, prov_f = _sup(problem.drift, r, a, b, allow_heuristic, seed)
    d_s, prov_s = _sup(problem.diffusion, r, a, b, allow_heuristic, seed)
    inputs = {"a": a, "b": b, "r": r}
    if d_f is None or d_s is None:
        missing = "drift" if d_f is None else "diffusion"
        return ConditionReport(
            "schauder_sie", UNAVAILABLE, {}, inputs, "<=", f"no analytic sup bound for {missing}"
        )
    provenance = _worst(prov_f, prov_s)
    inputs["provenance"] = provenance
    e_h2 = problem.h.second_moment
    d = max(d_f, d_s)
    length = b - a
    lhs = 3 * e_h2 + 3 * (1 + length) * length * d * d
    rhs = r * r
    verdict = _verdict(lhs, "<=", rhs, provenance)
    inter = {"E_h2": e_h2, "d_f": d_f, "d_sigma": d_s, "d": d, "lhs": lhs, "rhs": rhs}
    return ConditionReport("schauder_sie", verdict, inter, inputs, "<=")


def check_banach(problem, *, allow_heuristic=False, seed=0, r=1.0):
    """Uniqueness condition ``0 <= 2 c^2 (1+b-a)(b-a) < 1`` with ``c = max(k1, k2)``.

    ``r`` only matters for heuristic Lipschitz sampling.
    """
    a, b = problem.a, problem.b
    k1, prov_1 = _lip(problem.drift, a, b, allow_heuristic, seed, r)
    k2, prov_2 = _lip(problem.diffusion, a, b, allow_heuristic, seed, r)
    inputs = {"a": a, "b": b}
    if k1 is None or k2 is None:
        missing = "drift" if k1 is None else "diffusion"
        return ConditionReport(
            "banach_sie", UNAVAILABLE, {}, inputs, "<", f"no Lipschitz constant for {missing}"
        )
    provenance = _worst(prov_1, prov_2)
    inputs["provenance"] = provenance
    c = max(k1, k2)
    length = b - a
    k_sq = 2 * c * c * (1 + length) * length
    inter = {"k1": k1, "k2": k2, "c": c, "k_squared": k_sq, "k": math.sqrt(k_sq), "lhs": k_sq, "rhs": 1.0}
    return ConditionReport("banach_sie", _verdict(k_sq, "<", 1.0, provenance), inter, inputs, "<")


def _kernel_quantity(kernel, method, *args):
    fn = getattr(kernel, method, None)
    return None if fn is None else fn(*args)


def check_fredholm_schauder(problem, r):
    """Existence condition ``|lam| M <= r`` for the deterministic equation.

    ``M`` is defined through ``(b - a) M = max |F|`` over
    ``[a, b]^2 x [-r, r]``. The report also carries ``operator_bound``
    ``= |lam| (b - a) max|F|``, the direct sup-norm bound on the operator.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    a, b, lam = problem.a, problem.b, problem.lam
    inputs = {"a": a, "b": b, "lambda": lam, "r": r}
    max_f = _kernel_quantity(problem.kernel, "max_abs", a, b, r)
    if max_f is None:
        return ConditionReport("schauder_fredholm", UNAVAILABLE, {}, inputs, "<=", "kernel has no max bound")
    inputs["provenance"] = ANALYTIC
    big_m = max_f / (b - a)
    lhs = abs(lam) * big_m
    inter = {
        "max_F": max_f,
        "M": big_m,
        "operator_bound": abs(lam) * (b - a) * max_f,
        "lhs": lhs,
        "rhs": float(r),
    }
    return ConditionReport("schauder_fredholm", _verdict(lhs, "<=", r, ANALYTIC), inter, inputs, "<=")


def check_fredholm_banach(problem):
    """Uniqueness condition ``(b - a) |lam| L < 1``."""
    a, b, lam = problem.a, problem.b, problem.lam
    inputs = {"a": a, "b": b, "lambda": lam}
    big_l = _kernel_quantity(problem.kernel, "u_lipschitz", a, b)
    if big_l is None:
        return ConditionReport("banach_fredholm", UNAVAILABLE, {}, inputs, "<", "kernel has no dF/du bound")
    inputs["provenance"] = ANALYTIC
    lhs = (b - a) * abs(lam) * big_l
    inter = {"L": big_l, "lhs": lhs, "rhs": 1.0}
    return ConditionReport("banach_fredholm", _verdict(lhs, "<", 1.0, ANALYTIC), inter, inputs, "<")


def min_radius(problem, *, r_max=R_MAX, tol=RADIUS_TOL):
    """Smallest ``r`` for which :func:`check_schauder` passes, or ``None``.

    Bisection on ``(0, r_max]``; assumes feasibility is monotone in ``r``,
    which holds for registry coefficients (their sup bounds are concave and
    non-decreasing in ``r``). Returns ``None`` when ``r_max`` itself fails.
    """
    def feasible(r):
        report = check_schauder(problem, r)
        if report.verdict == UNAVAILABLE:
            raise BoundUnavailable(report.message)
        return report.verdict == PASS

    if not feasible(r_max):
        return None
    lo, hi = 0.0, float(r_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi
