import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siepicard.coefficients import Constant, Custom, Linear, Poly
from siepicard.conditions import (
    FAIL,
    PASS,
    PASS_HEURISTIC,
    UNAVAILABLE,
    InitialLaw,
    SieProblem,
    check_banach,
    check_fredholm_banach,
    check_fredholm_schauder,
    check_schauder,
    min_radius,
    parse_initial_law,
)
from siepicard.errors import BoundUnavailable, DescriptorError, InvalidInterval
from siepicard.fredholm import AffineKernel, FredholmProblem, SeparableKernel


def const_problem(h=1.0, c=1.0, a=0.0, b=1.0):
    return SieProblem(a, b, InitialLaw.constant(h), Constant(c), Constant(c))


def linear_problem(k1, k2, a=0.0, b=1.0, h=1.0):
    return SieProblem(a, b, InitialLaw.constant(h), Linear(Poly((k1,))), Linear(Poly((k2,))))


def fredholm(kernel, lam=1.0, a=0.0, b=1.0):
    return FredholmProblem(a, b, lam, kernel)


ONE = Poly((1.0,))
X = Poly((0.0, 1.0))


# --- initial laws -----------------------------------------------------------


@pytest.mark.parametrize(
    "law, second",
    [
        (InitialLaw.constant(3.0), 9.0),
        (InitialLaw.normal(1.0, 0.25), 1.25),
        (InitialLaw.lognormal(0.1, 0.04), math.exp(0.2 + 0.08)),
    ],
)
def test_second_moments(law, second):
    assert law.second_moment == pytest.approx(second, rel=1e-15)


@pytest.mark.parametrize(
    "law", [InitialLaw.normal(1.0, 0.25), InitialLaw.lognormal(0.1, 0.04)], ids=["normal", "lognormal"]
)
def test_sampling_matches_moments(law):
    h = law.sample(200_000, 5)
    n = h.size
    assert abs(h.mean() - law.mean) <= 4 * h.std(ddof=1) / math.sqrt(n)
    sq = h * h
    assert abs(sq.mean() - law.second_moment) <= 4 * sq.std(ddof=1) / math.sqrt(n)


def test_sampling_is_seeded():
    law = InitialLaw.normal(0.0, 1.0)
    np.testing.assert_array_equal(law.sample(10, 1), law.sample(10, 1))
    assert not np.array_equal(law.sample(10, 1), law.sample(10, 2))


@pytest.mark.parametrize("text", ["constant:1.5", "normal:0.0,2.0", "lognormal:0.1,0.04"])
def test_law_descriptor_round_trip(text):
    law = parse_initial_law(text)
    assert parse_initial_law(law.descriptor()) == law


@pytest.mark.parametrize("text", ["uniform:0,1", "normal:1", "normal:0,-1", "constant:x"])
def test_bad_law_rejected(text):
    with pytest.raises(DescriptorError):
        parse_initial_law(text)


def test_problem_interval_checked():
    with pytest.raises(InvalidInterval):
        const_problem(a=1.0, b=1.0)


# --- Schauder -----------------------------------------------------------------


def test_schauder_boundary_is_exact():
    rep = check_schauder(const_problem(), 3.0)
    assert rep.intermediates["lhs"] == 9.0
    assert rep.intermediates["rhs"] == 9.0
    assert rep.intermediates["d"] == 1.0
    assert rep.verdict == PASS
    assert rep.boundary


def test_schauder_fails_below_boundary():
    rep = check_schauder(const_problem(), 2.9)
    assert rep.intermediates["lhs"] == 9.0
    assert rep.intermediates["rhs"] == 2.9 * 2.9
    assert rep.verdict == FAIL


def test_schauder_root_six_boundary():
    rep = check_schauder(const_problem(h=0.0), math.sqrt(6))
    assert rep.intermediates["lhs"] == 6.0
    # sqrt(6)**2 rounds to 5.999999999999999; the boundary still passes
    assert rep.intermediates["rhs"] == math.sqrt(6) ** 2
    assert rep.verdict == PASS


def test_schauder_intermediates_formula():
    p = SieProblem(0.5, 2.0, InitialLaw.normal(1.0, 0.5), Linear(Poly((0.3,))), Constant(0.2))
    rep = check_schauder(p, 4.0)
    d = max(0.3 * 4.0, 0.2)
    assert rep.intermediates["E_h2"] == 1.5
    assert rep.intermediates["d"] == d
    assert rep.intermediates["lhs"] == pytest.approx(3 * 1.5 + 3 * 2.5 * 1.5 * d * d, rel=1e-15)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_schauder_rejects_bad_radius(r):
    with pytest.raises(ValueError):
        check_schauder(const_problem(), r)


@given(st.floats(3.0, 1e6))
def test_schauder_monotone_for_constant_d(r):
    assert check_schauder(const_problem(), r).verdict == PASS


def test_schauder_unavailable_without_bound():
    p = SieProblem(0, 1, InitialLaw.constant(1.0), Custom(np.sin), Constant(1.0))
    rep = check_schauder(p, 3.0)
    assert rep.verdict == UNAVAILABLE
    assert "drift" in rep.message


def test_schauder_heuristic_pass():
    p = SieProblem(0, 1, InitialLaw.constant(0.0), Custom(lambda s, x: np.sin(x)), Constant(0.5))
    rep = check_schauder(p, 3.0, allow_heuristic=True)
    assert rep.verdict == PASS_HEURISTIC
    assert rep.passed
    assert rep.inputs["provenance"] == "sampled-heuristic"


# --- Banach ---------------------------------------------------------------------


def test_banach_small_constants():
    rep = check_banach(linear_problem(0.1, 0.1))
    assert rep.intermediates["c"] == 0.1
    assert rep.intermediates["k_squared"] == pytest.approx(0.04, abs=math.ulp(0.04))
    assert rep.intermediates["k"] == 0.2
    assert rep.verdict == PASS


def test_banach_boundary_is_strict():
    rep = check_banach(linear_problem(0.5, 0.5))
    assert rep.intermediates["k_squared"] == 1.0
    assert rep.verdict == FAIL


def test_banach_gbm():
    rep = check_banach(linear_problem(0.05, 0.2))
    assert rep.intermediates["c"] == 0.2
    assert rep.intermediates["k_squared"] == pytest.approx(0.16, abs=math.ulp(0.16))
    assert rep.intermediates["k"] == pytest.approx(0.4, abs=math.ulp(0.4))
    assert rep.verdict == PASS


@given(st.floats(0, 2), st.floats(0, 2))
def test_banach_symmetric_in_coefficients(k1, k2):
    a = check_banach(linear_problem(k1, k2))
    b = check_banach(linear_problem(k2, k1))
    assert a.verdict == b.verdict
    assert a.intermediates["k_squared"] == b.intermediates["k_squared"]


def test_banach_unavailable():
    p = SieProblem(0, 1, InitialLaw.constant(1.0), Constant(1.0), Custom(np.sin))
    rep = check_banach(p)
    assert rep.verdict == UNAVAILABLE
    assert "diffusion" in rep.message


def test_banach_heuristic():
    p = SieProblem(0, 1, InitialLaw.constant(1.0), Constant(1.0), Custom(lambda s, x: 0.1 * np.sin(x)))
    rep = check_banach(p, allow_heuristic=True)
    assert rep.verdict == PASS_HEURISTIC
    assert rep.intermediates["k2"] <= 0.1


# --- self-consistency ---------------------------------------------------------


problems = st.builds(
    linear_problem,
    st.floats(0, 3),
    st.floats(0, 3),
    st.just(0.0),
    st.floats(0.1, 3),
    st.floats(-3, 3),
)


@given(problems, st.floats(0.01, 100))
def test_reports_recheck_to_same_verdict(problem, r):
    for rep in (check_schauder(problem, r), check_banach(problem)):
        assert rep.recheck() == rep.verdict


@given(st.floats(0, 2), st.floats(0.01, 2))
def test_fredholm_reports_recheck(gamma, r):
    p = fredholm(AffineKernel(X, X, gamma))
    for rep in (check_fredholm_schauder(p, r), check_fredholm_banach(p)):
        assert rep.recheck() == rep.verdict


def test_report_serialisation():
    rep = check_banach(linear_problem(0.1, 0.1))
    row = rep.to_csv_row()
    assert row[:2] == ["banach_sie", "pass"]
    assert "k=0.2" in row[2].split(";")
    text = rep.to_text()
    assert "theorem=banach_sie\n" in text and "relation=<\n" in text


# --- Fredholm -------------------------------------------------------------------


def test_fredholm_schauder_examples():
    unit = SeparableKernel(ONE, ONE)
    rep = check_fredholm_schauder(fredholm(unit), 1.0)
    assert rep.intermediates["M"] == 1.0 and rep.verdict == PASS
    two = SeparableKernel(Poly((2.0,)), ONE)
    assert check_fredholm_schauder(fredholm(two), 1.0).verdict == FAIL
    assert check_fredholm_schauder(fredholm(two, lam=0.0), 1e-6).verdict == PASS


def test_fredholm_schauder_divides_by_length():
    p = fredholm(SeparableKernel(Poly((3.0,)), ONE), lam=0.5, a=0.0, b=2.0)
    rep = check_fredholm_schauder(p, 1.0)
    assert rep.intermediates["max_F"] == 3.0
    assert rep.intermediates["M"] == 1.5
    assert rep.intermediates["lhs"] == 0.75
    assert rep.intermediates["operator_bound"] == 3.0


def test_fredholm_banach_examples():
    rep = check_fredholm_banach(fredholm(AffineKernel(X, X, 0.25)))
    assert rep.intermediates["L"] == 0.25 and rep.intermediates["lhs"] == 0.25
    assert rep.verdict == PASS
    assert check_fredholm_banach(fredholm(AffineKernel(X, X, 1.0))).verdict == FAIL
    assert check_fredholm_banach(fredholm(AffineKernel(X, X, 5.0), lam=0.0)).verdict == PASS


def test_fredholm_unavailable_for_kernel_without_metadata():
    p = fredholm(lambda x, y, u: x * y)
    assert check_fredholm_banach(p).verdict == UNAVAILABLE
    assert check_fredholm_schauder(p, 1.0).verdict == UNAVAILABLE


# --- minimal radius -------------------------------------------------------------


def test_min_radius_root_six():
    assert min_radius(const_problem(h=0.0)) == pytest.approx(math.sqrt(6), abs=1e-9)


def test_min_radius_three():
    assert min_radius(const_problem(h=1.0)) == pytest.approx(3.0, abs=1e-9)


def test_min_radius_result_passes():
    r = min_radius(const_problem(h=2.0, c=0.5))
    assert check_schauder(const_problem(h=2.0, c=0.5), r).verdict == PASS
    assert check_schauder(const_problem(h=2.0, c=0.5), r - 2e-9).verdict == FAIL


def test_min_radius_infeasible_for_unit_linear():
    assert min_radius(linear_problem(1.0, 1.0)) is None
    assert min_radius(linear_problem(1.0, 1.0, h=0.0)) is None


def test_min_radius_unavailable():
    p = SieProblem(0, 1, InitialLaw.constant(1.0), Custom(np.sin), Constant(1.0))
    with pytest.raises(BoundUnavailable):
        min_radius(p)
