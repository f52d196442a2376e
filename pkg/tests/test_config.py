import textwrap

import pytest
from hypothesis import given
from hypothesis import strategies as st

from siepicard.coefficients import Linear, Poly
from siepicard.config import ExperimentConfig, load_config, parse_config
from siepicard.errors import ConfigError

GBM = textwrap.dedent(
    """
    [problem]
    type = sie
    h = constant:1.0
    drift = linear:poly:0.05
    diffusion = linear:poly:0.2

    [grid]
    m = 64
    n_paths = 1000
    seed = 9

    [checks]
    run = banach
    """
)


def test_parse_values():
    cfg = parse_config(GBM)
    assert cfg.grid.m == 64 and cfg.grid.n_paths == 1000 and cfg.grid.seed == 9
    assert cfg.checks.run == ("banach",)
    assert cfg.sie_problem().drift == Linear(Poly((0.05,)))
    assert cfg.problem.radius is None


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.solver.damping == 1.0


def test_round_trip_is_lossless():
    cfg = parse_config(GBM)
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(cfg.to_text()).to_text() == cfg.to_text()


def test_digest_tracks_content():
    cfg = parse_config(GBM)
    other = parse_config(GBM.replace("seed = 9", "seed = 10"))
    assert cfg.digest() == parse_config(GBM).digest()
    assert cfg.digest() != other.digest()


def test_lambda_key():
    cfg = parse_config("[problem]\ntype = fredholm\n[fredholm]\nlambda = 0.5\n")
    assert cfg.fredholm.lam == 0.5
    assert "lambda = 0.5" in cfg.to_text()
    with pytest.raises(ConfigError, match="unknown key fredholm.lam"):
        parse_config("[fredholm]\nlam = 0.5\n")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[grid]\nseeds = 3\n", "unknown key grid.seeds"),
        ("[grdi]\nm = 3\n", "unknown section"),
        ("[problem]\ndrift = quadratic:1\n", "problem.drift"),
        ("[problem]\ndiffusion = linear:poly:x\n", "problem.diffusion"),
        ("[problem]\nh = uniform:0,1\n", "problem.h"),
        ("[grid]\nm = ten\n", "grid.m"),
        ("[checks]\nrun = banach, schauder_fredholm\n", "checks.run"),
        ("[problem]\ntype = ode\n", "problem.type"),
        ("[problem]\na = 2\nb = 1\n", "problem"),
        ("[solver]\ndamping = 0\n", "solver.damping"),
        ("[isometry]\nintegrands = one, sin\n", "isometry.integrands"),
        ("[grid]\nseed = -1\n", "grid.seed"),
        ("[grid]\nm = 3\nm = 4\n", "m"),
        ("no header\n", "header"),
    ],
)
def test_rejects(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_load_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(GBM)
    assert load_config(path) == parse_config(GBM)


@given(
    m=st.integers(1, 10**6),
    n=st.integers(1, 10**7),
    seed=st.integers(0, 2**64 - 1),
    tol=st.floats(1e-300, 1.0),
    damping=st.floats(1e-6, 1.0),
    radius=st.one_of(st.none(), st.floats(1e-6, 1e6)),
    lam=st.floats(-1e6, 1e6),
    heuristic=st.booleans(),
)
def test_round_trip_property(m, n, seed, tol, damping, radius, lam, heuristic):
    cfg = ExperimentConfig()
    cfg.grid.m, cfg.grid.n_paths, cfg.grid.seed = m, n, seed
    cfg.solver.tol, cfg.solver.damping = tol, damping
    cfg.problem.radius = radius
    cfg.fredholm.lam = lam
    cfg.checks.allow_heuristic = heuristic
    assert parse_config(cfg.to_text()) == cfg
