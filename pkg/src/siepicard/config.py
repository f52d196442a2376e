"""Experiment configuration: an INI-style file with strict key checking.

Example::

    [problem]
    type = sie
    a = 0.0
    b = 1.0
    h = constant:1.0
    drift = linear:poly:0.05
    diffusion = linear:poly:0.2
    radius = 3.0

    [grid]
    m = 512
    n_paths = 20000
    seed = 0

    [solver]
    tol = 1e-06
    max_iter = 50

Unknown sections or keys raise :class:`ConfigError`. Every descriptor is
parsed at load time so a bad one is reported with the key that holds it.
"""

import configparser
import hashlib
from dataclasses import dataclass, field, fields

from .coefficients import parse_coefficient
from .conditions import SieProblem, parse_initial_law
from .errors import ConfigError, SieError
from .experiments import ISOMETRY_INTEGRANDS
from .fredholm import FredholmProblem, parse_kernel

__all__ = ["ExperimentConfig", "load_config", "parse_config"]

SIE_CHECKS = ("schauder", "banach")
FREDHOLM_CHECKS = ("schauder_fredholm", "banach_fredholm")


def _intlist(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _strlist(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _optfloat(text):
    return None if text.strip() in ("", "none") else float(text)


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ProblemSection:
    type: str = "sie"
    a: float = 0.0
    b: float = 1.0
    h: str = "constant:1.0"
    drift: str = "linear:poly:0.05"
    diffusion: str = "linear:poly:0.2"
    radius: float | None = None


@dataclass
class FredholmSection:
    lam: float = 1.0
    kernel: str = "affine:(poly:0.0,1.0):(poly:0.0,1.0):0.25"
    n_quad: int = 256
    tol: float = 1e-12
    max_iter: int = 500


@dataclass
class GridSection:
    m: int = 512
    n_paths: int = 20000
    seed: int = 0


@dataclass
class SolverSection:
    tol: float = 1e-6
    max_iter: int = 50
    damping: float = 1.0
    initial: str = "h"
    seed_h: int = 0


@dataclass
class ChecksSection:
    run: tuple = ()
    allow_heuristic: bool = False


@dataclass
class GbmSection:
    levels: tuple = (4, 5, 6, 7, 8)
    tol: float = 1e-10


@dataclass
class IsometrySection:
    integrands: tuple = ISOMETRY_INTEGRANDS
    tolerance: float = 0.02


@dataclass
class OutputSection:
    dir: str = "out"
    threads: int = 1


_SECTIONS = {
    "problem": ("problem", ProblemSection),
    "fredholm": ("fredholm", FredholmSection),
    "grid": ("grid", GridSection),
    "solver": ("solver", SolverSection),
    "checks": ("checks", ChecksSection),
    "gbm": ("gbm", GbmSection),
    "isometry": ("isometry", IsometrySection),
    "output": ("output", OutputSection),
}
# (section, file key) -> attribute name, where the two differ
_RENAMES = {("fredholm", "lambda"): "lam"}

_PARSERS = {
    float: float,
    int: int,
    str: str.strip,
    bool: _bool,
    float | None: _optfloat,
}
_LIST_PARSERS = {
    ("checks", "run"): _strlist,
    ("gbm", "levels"): _intlist,
    ("isometry", "integrands"): _strlist,
}


def _file_key(section, attr):
    for (sec, key), name in _RENAMES.items():
        if sec == section and name == attr:
            return key
    return attr


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


@dataclass
class ExperimentConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    fredholm: FredholmSection = field(default_factory=FredholmSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    checks: ChecksSection = field(default_factory=ChecksSection)
    gbm: GbmSection = field(default_factory=GbmSection)
    isometry: IsometrySection = field(default_factory=IsometrySection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_text(self):
        """Canonical text form; ``parse_config(c.to_text()) == c``."""
        lines = []
        for section, (attr, _) in _SECTIONS.items():
            lines.append(f"[{section}]")
            sec = getattr(self, attr)
            for f in fields(sec):
                lines.append(f"{_file_key(section, f.name)} = {_format(getattr(sec, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def sie_problem(self):
        p = self.problem
        return SieProblem(
            p.a, p.b, parse_initial_law(p.h), parse_coefficient(p.drift), parse_coefficient(p.diffusion)
        )

    def fredholm_problem(self):
        return FredholmProblem(self.problem.a, self.problem.b, self.fredholm.lam, parse_kernel(self.fredholm.kernel))

    def validate(self):
        p = self.problem
        if p.type not in ("sie", "fredholm"):
            raise ConfigError(f"problem.type: expected 'sie' or 'fredholm', got {p.type!r}")
        builders = {
            "problem.h": lambda: parse_initial_law(p.h),
            "problem.drift": lambda: parse_coefficient(p.drift),
            "problem.diffusion": lambda: parse_coefficient(p.diffusion),
            "fredholm.kernel": lambda: parse_kernel(self.fredholm.kernel),
        }
        for key, build in builders.items():
            try:
                build()
            except (SieError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}") from None
        try:
            self.sie_problem() if p.type == "sie" else self.fredholm_problem()
        except (SieError, ValueError) as exc:
            raise ConfigError(f"problem: {exc}") from None
        known = SIE_CHECKS if p.type == "sie" else FREDHOLM_CHECKS
        for name in self.checks.run:
            if name not in known:
                raise ConfigError(f"checks.run: unknown check {name!r} for {p.type} problems")
        for name in self.isometry.integrands:
            if name not in ISOMETRY_INTEGRANDS:
                raise ConfigError(f"isometry.integrands: unknown integrand {name!r}")
        if self.grid.m < 1 or self.grid.n_paths < 1:
            raise ConfigError("grid.m and grid.n_paths must be positive")
        if not 0 <= self.grid.seed < 2**64:
            raise ConfigError("grid.seed must be an unsigned 64-bit integer")
        if self.solver.initial not in ("h", "zero"):
            raise ConfigError(f"solver.initial: expected 'h' or 'zero', got {self.solver.initial!r}")
        if not 0 < self.solver.damping <= 1:
            raise ConfigError("solver.damping must be in (0, 1]")
        if not self.gbm.levels:
            raise ConfigError("gbm.levels must name at least one level")
        return self


def parse_config(text):
    parser = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    config = ExperimentConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        attr, _ = _SECTIONS[section]
        sec = getattr(config, attr)
        types = {_file_key(section, f.name): (f.name, f.type) for f in fields(sec)}
        for key, raw in parser.items(section):
            if key not in types:
                raise ConfigError(f"unknown key {section}.{key}")
            name, kind = types[key]
            parse = _LIST_PARSERS.get((section, name)) or _PARSERS[kind]
            try:
                setattr(sec, name, parse(raw))
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
    return config.validate()


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
