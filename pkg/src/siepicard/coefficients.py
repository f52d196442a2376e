"""Drift and diffusion coefficients with analytic bound metadata.

Coefficients come from a closed registry so that Lipschitz constants and
sup bounds can be computed in closed form:

* ``Constant(c)``            -> ``c``
* ``Linear(g)``              -> ``g(s) * x``
* ``Affine(alpha, beta)``    -> ``alpha(s) * x + beta(s)``
* ``Clipped(inner, bound)``  -> ``inner(s, x)`` clipped to ``[-bound, bound]``

Time functions ``g``, ``alpha``, ``beta`` are polynomials or sinusoids.
``Custom`` wraps an arbitrary callable; its bounds are whatever the caller
declares, otherwise unavailable.

Descriptor grammar (used by config files)::

    coef   := "constant:" NUM
            | "linear:" tfun
            | "affine:(" tfun "):(" tfun ")"
            | "clipped:" NUM ":(" coef ")"
    tfun   := "poly:" NUM ("," NUM)*      ascending powers of s
            | "const:" NUM
            | "sin:" AMP "," FREQ "," PHASE   AMP * sin(FREQ * s + PHASE)
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import DescriptorError

__all__ = [
    "Poly",
    "Sinusoid",
    "Constant",
    "Linear",
    "Affine",
    "Clipped",
    "Custom",
    "BoundInfo",
    "evaluate",
    "lipschitz_constant",
    "sup_bound",
    "estimate_bounds",
    "parse_time_function",
    "parse_coefficient",
]

ANALYTIC = "analytic"
HEURISTIC = "sampled-heuristic"


def _num(x):
    return repr(float(x))


# --- time functions -------------------------------------------------------


@dataclass(frozen=True)
class Poly:
    """``sum_k coeffs[k] * s**k``."""

    coeffs: tuple

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self.coeffs)

    def max_abs(self, a, b):
        candidates = [a, b]
        if len(self.coeffs) > 2:
            crit = np.polynomial.Polynomial(self.coeffs).deriv().roots()
            candidates += [r.real for r in crit if abs(r.imag) < 1e-12 and a <= r.real <= b]
        return float(max(abs(self(c)) for c in candidates))

    def descriptor(self):
        return "poly:" + ",".join(_num(c) for c in self.coeffs)


@dataclass(frozen=True)
class Sinusoid:
    """``amp * sin(freq * s + phase)``."""

    amp: float
    freq: float
    phase: float

    def __call__(self, s):
        return self.amp * np.sin(self.freq * np.asarray(s) + self.phase)

    def max_abs(self, a, b):
        lo, hi = sorted((self.freq * a + self.phase, self.freq * b + self.phase))
        # |sin| peaks at pi/2 + k*pi
        k_lo = math.ceil((lo - math.pi / 2) / math.pi)
        k_hi = math.floor((hi - math.pi / 2) / math.pi)
        if k_lo <= k_hi:
            return abs(float(self.amp))
        return float(max(abs(self(a)), abs(self(b))))

    def descriptor(self):
        return f"sin:{_num(self.amp)},{_num(self.freq)},{_num(self.phase)}"


# --- coefficients ---------------------------------------------------------


def _shape(s, x):
    return np.broadcast_shapes(np.shape(s), np.shape(x))


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, s, x):
        return np.full(_shape(s, x), float(self.value))

    def lipschitz(self, a, b):
        return 0.0

    def sup_bound(self, a, b, r):
        return abs(float(self.value))

    def descriptor(self):
        return f"constant:{_num(self.value)}"


@dataclass(frozen=True)
class Linear:
    """``g(s) * x``, the form of both coefficients in the linear equation."""

    g: object

    def __call__(self, s, x):
        return self.g(s) * x

    def lipschitz(self, a, b):
        return self.g.max_abs(a, b)

    def sup_bound(self, a, b, r):
        return self.g.max_abs(a, b) * r

    def descriptor(self):
        return f"linear:{self.g.descriptor()}"


@dataclass(frozen=True)
class Affine:
    alpha: object
    beta: object

    def __call__(self, s, x):
        return self.alpha(s) * x + self.beta(s)

    def lipschitz(self, a, b):
        return self.alpha.max_abs(a, b)

    def sup_bound(self, a, b, r):
        return self.alpha.max_abs(a, b) * r + self.beta.max_abs(a, b)

    def descriptor(self):
        return f"affine:({self.alpha.descriptor()}):({self.beta.descriptor()})"


@dataclass(frozen=True)
class Clipped:
    inner: object
    bound: float

    def __post_init__(self):
        if not self.bound >= 0:
            raise ValueError(f"clip bound must be non-negative, got {self.bound}")

    def __call__(self, s, x):
        return np.clip(self.inner(s, x), -self.bound, self.bound)

    def lipschitz(self, a, b):
        # clipping is 1-Lipschitz, so it never increases the inner constant
        return self.inner.lipschitz(a, b)

    def sup_bound(self, a, b, r):
        inner = self.inner.sup_bound(a, b, r)
        return float(self.bound) if inner is None else min(float(self.bound), inner)

    def descriptor(self):
        return f"clipped:{_num(self.bound)}:({self.inner.descriptor()})"


@dataclass(frozen=True, eq=False)
class Custom:
    """A user callable ``func(s, x)`` with optionally declared bounds.

    ``sup`` may be a number (valid for every radius) or a callable ``sup(r)``.
    Undeclared bounds are reported as unavailable. Not expressible as a
    descriptor.
    """

    func: object
    lipschitz_const: float | None = None
    sup: object = None
    name: str = "custom"

    def __call__(self, s, x):
        return np.broadcast_to(np.asarray(self.func(s, x), dtype=np.float64), _shape(s, x))

    def lipschitz(self, a, b):
        return self.lipschitz_const

    def sup_bound(self, a, b, r):
        if self.sup is None:
            return None
        return float(self.sup(r)) if callable(self.sup) else float(self.sup)

    def descriptor(self):
        raise DescriptorError(f"custom coefficient {self.name!r} has no descriptor")


@dataclass(frozen=True)
class BoundInfo:
    """Lipschitz constant and sup over ``[a, b] x [-r, r]``; ``None`` = unavailable."""

    lipschitz: float | None
    sup_on_ball: float | None
    provenance: str
    r: float


def evaluate(coef, s, x):
    """Evaluate ``coef`` at ``(s, x)``, rejecting non-finite input."""
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(x))):
        raise ValueError(f"non-finite input to coefficient: s={s!r}, x={x!r}")
    out = coef(s, x)
    return float(out) if np.ndim(out) == 0 else out


def lipschitz_constant(coef, a, b):
    """Analytic Lipschitz constant in ``x`` over ``s`` in ``[a, b]``, or ``None``."""
    value = coef.lipschitz(a, b)
    return None if value is None else float(value)


def sup_bound(coef, r, a, b):
    """Analytic ``sup |coef(s, x)|`` over ``s`` in ``[a, b]``, ``|x| <= r``, or ``None``."""
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    value = coef.sup_bound(a, b, r)
    return None if value is None else float(value)


def analytic_bounds(coef, a, b, r):
    return BoundInfo(lipschitz_constant(coef, a, b), sup_bound(coef, r, a, b), ANALYTIC, float(r))


def estimate_bounds(coef, a, b, r, n_samples, seed):
    """Sampled bounds for coefficients without closed forms.

    The sup is the largest ``|coef|`` seen over uniform samples of
    ``[a, b] x [-r, r]``; the Lipschitz estimate is the largest difference
    quotient over ``n_samples`` pairs sharing a time. Both are lower bounds
    on the true values and are labelled as heuristic.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = _rng.generator(seed, _rng.STREAM_BOUNDS)
    s = rng.uniform(a, b, n_samples)
    x = rng.uniform(-r, r, n_samples)
    y = rng.uniform(-r, r, n_samples)
    fx = np.asarray(coef(s, x), dtype=np.float64)
    fy = np.asarray(coef(s, y), dtype=np.float64)
    sup = float(np.max(np.abs(fx)))
    gap = np.abs(x - y)
    ok = gap > 0
    lip = float(np.max(np.abs(fx - fy)[ok] / gap[ok])) if np.any(ok) else 0.0
    return BoundInfo(lip, sup, HEURISTIC, float(r))


# --- descriptor parsing ---------------------------------------------------


def _split_top(text, sep=":"):
    """Split on ``sep`` outside parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise DescriptorError(f"unbalanced ')' in {text!r}")
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth:
        raise DescriptorError(f"unbalanced '(' in {text!r}")
    parts.append(text[start:])
    return parts


def _unwrap(text):
    """Strip parentheses that enclose the whole of ``text``."""
    text = text.strip()
    while text.startswith("("):
        depth = 0
        for i, ch in enumerate(text):
            depth += (ch == "(") - (ch == ")")
            if depth == 0:
                break
        if depth:
            raise DescriptorError(f"unbalanced '(' in {text!r}")
        if i != len(text) - 1:
            break
        text = text[1:-1].strip()
    return text


def _float(token, whole):
    try:
        value = float(token)
    except ValueError:
        raise DescriptorError(f"bad number {token!r} in descriptor {whole!r}") from None
    if not math.isfinite(value):
        raise DescriptorError(f"non-finite number {token!r} in descriptor {whole!r}")
    return value


def parse_time_function(text):
    whole = text
    text = _unwrap(text)
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    args = [_float(tok, whole) for tok in rest.split(",")] if rest.strip() else []
    if kind == "poly" and args:
        return Poly(tuple(args))
    if kind == "const" and len(args) == 1:
        return Poly((args[0],))
    if kind == "sin" and len(args) == 3:
        return Sinusoid(*args)
    raise DescriptorError(f"unknown time function {whole!r}")


def parse_coefficient(text):
    """Parse a coefficient descriptor such as ``linear:poly:0.05``."""
    whole = text
    text = _unwrap(text)
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "constant":
        return Constant(_float(rest, whole))
    if kind == "linear":
        return Linear(parse_time_function(rest))
    if kind == "affine":
        parts = _split_top(rest)
        if len(parts) != 2:
            raise DescriptorError(f"affine needs two time functions: {whole!r}")
        return Affine(parse_time_function(parts[0]), parse_time_function(parts[1]))
    if kind == "clipped":
        parts = _split_top(rest)
        if len(parts) < 2:
            raise DescriptorError(f"clipped needs a bound and an inner coefficient: {whole!r}")
        bound = _float(parts[0], whole)
        if bound < 0:
            raise DescriptorError(f"clip bound must be non-negative: {whole!r}")
        return Clipped(parse_coefficient(":".join(parts[1:])), bound)
    raise DescriptorError(f"unknown coefficient {whole!r}")
