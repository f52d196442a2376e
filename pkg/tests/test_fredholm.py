import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siepicard.coefficients import Poly, Sinusoid
from siepicard.conditions import check_fredholm_banach
from siepicard.errors import DescriptorError, InvalidInterval, ShapeMismatch
from siepicard.fredholm import (
    AffineKernel,
    FredholmProblem,
    RATE_FLOOR,
    GridFunction,
    SeparableKernel,
    SineKernel,
    apply_fredholm,
    parse_kernel,
    quadrature_nodes,
    solve_fredholm,
)

ONE = Poly((1.0,))
X = Poly((0.0, 1.0))
XY_QUARTER = AffineKernel(X, X, 0.25)


def zero_on(n, a=0.0, b=1.0):
    nodes = quadrature_nodes(a, b, n)
    return GridFunction(nodes, np.zeros_like(nodes))


def test_apply_zero_lambda():
    out = apply_fredholm(FredholmProblem(0, 1, 0.0, XY_QUARTER), zero_on(8), 8)
    assert np.all(out.values == 0.0)


def test_apply_unit_kernel():
    out = apply_fredholm(FredholmProblem(0, 1, 1.0, SeparableKernel(ONE, ONE)), zero_on(8), 8)
    np.testing.assert_allclose(out.values, 1.0, rtol=1e-15)


def test_apply_product_kernel_is_exact():
    out = apply_fredholm(FredholmProblem(0, 1, 1.0, SeparableKernel(X, X)), zero_on(16), 16)
    np.testing.assert_allclose(out.values, out.nodes / 2, atol=1e-12)


def test_apply_rejects_wrong_nodes():
    with pytest.raises(ShapeMismatch):
        apply_fredholm(FredholmProblem(0, 1, 1.0, XY_QUARTER), zero_on(8), 16)


def test_problem_interval_checked():
    with pytest.raises(InvalidInterval):
        FredholmProblem(1, 0, 1.0, XY_QUARTER)


def test_grid_function_checks():
    with pytest.raises(ShapeMismatch):
        GridFunction(np.zeros(3), np.zeros(4))


def test_solve_affine_kernel():
    res = solve_fredholm(FredholmProblem(0, 1, 1.0, XY_QUARTER), 256, 1e-12)
    exact = res.solution.nodes / 2 + 1 / 12
    assert res.converged
    assert np.max(np.abs(res.solution.values - exact)) <= 1e-10
    assert res.empirical_rate <= 0.25 + 1e-6
    assert res.residual <= 2e-12


def test_solve_zero_lambda_one_iteration():
    res = solve_fredholm(FredholmProblem(0, 1, 0.0, XY_QUARTER), 32, 1e-12)
    assert res.converged and res.iterations == 1
    assert np.all(res.solution.values == 0.0)


def test_rate_bounded_by_condition_quantity():
    p = FredholmProblem(0.0, 2.0, 0.3, AffineKernel(ONE, Sinusoid(1.0, 1.0, 0.5), 1.2))
    rep = check_fredholm_banach(p)
    assert rep.passed
    res = solve_fredholm(p, 128, 1e-12)
    assert res.converged
    assert res.empirical_rate <= rep.intermediates["lhs"] + 1e-6
    assert res.residual <= 2e-12


def test_divergent_problem_is_reported():
    p = FredholmProblem(0, 1, 1.0, AffineKernel(X, X, 1.5))
    res = solve_fredholm(p, 16, 1e-12, max_iter=40)
    assert not res.converged
    assert res.iterations == 40
    assert res.history[-1] > res.history[0]


def test_overflow_is_reported_as_divergence():
    p = FredholmProblem(0, 1, 1.0, AffineKernel(X, X, 1e200))
    res = solve_fredholm(p, 8, 1e-12, max_iter=50)
    assert res.diverged and not res.converged


def test_ball_membership_recorded():
    p = FredholmProblem(0, 1, 1.0, XY_QUARTER)
    assert solve_fredholm(p, 64, 1e-12, r=1.0).in_ball is True
    assert solve_fredholm(p, 64, 1e-12, r=0.5).in_ball is False
    assert solve_fredholm(p, 64, 1e-12).in_ball is None


def test_quadrature_refinement_is_second_order():
    p = FredholmProblem(0, 1, 0.5, AffineKernel(Sinusoid(1.0, 2.0, 0.3), Sinusoid(1.0, 3.0, 0.0), 0.4))
    sols = {n: solve_fredholm(p, n, 1e-14).solution for n in (16, 32, 64, 128)}
    gaps = []
    for n in (16, 32, 64):
        coarse, fine = sols[n], sols[2 * n]
        gaps.append(np.max(np.abs(fine.values[::2] - coarse.values)))
    slopes = -np.diff(np.log2(gaps))
    assert np.all((slopes >= 1.7) & (slopes <= 2.3))


KERNELS = [
    SeparableKernel(Poly((1.0, -2.0)), Sinusoid(2.0, 3.0, 0.1)),
    AffineKernel(X, Poly((0.5, 0.5, -1.0)), -0.7),
    SineKernel(Sinusoid(1.5, 4.0, 0.0), Poly((1.0, 1.0))),
]


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.descriptor())
@pytest.mark.parametrize("r", [0.5, 3.0])
def test_kernel_metadata_consistent_with_evaluation(kernel, r):
    rng = np.random.default_rng(0)
    n = 10**5
    x, y = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
    u, v = rng.uniform(-r, r, n), rng.uniform(-r, r, n)
    assert np.max(np.abs(kernel(x, y, u))) <= kernel.max_abs(0, 1, r) * (1 + 1e-12)
    lip = kernel.u_lipschitz(0, 1)
    assert np.all(np.abs(kernel(x, y, u) - kernel(x, y, v)) <= lip * np.abs(u - v) * (1 + 1e-12) + 1e-14)


@pytest.mark.parametrize("kernel", KERNELS + [XY_QUARTER], ids=lambda k: k.descriptor())
def test_kernel_descriptor_round_trip(kernel):
    assert parse_kernel(kernel.descriptor()) == kernel


@pytest.mark.parametrize("text", ["affine:(poly:1):(poly:1)", "gauss:(poly:1):(poly:1)", "sine:(poly:1)"])
def test_bad_kernel_rejected(text):
    with pytest.raises(DescriptorError):
        parse_kernel(text)


@given(st.integers(1, 500), st.floats(-10, 10), st.floats(0.01, 10))
def test_quadrature_nodes_span_interval(n, a, length):
    nodes = quadrature_nodes(a, a + length, n)
    assert len(nodes) == n + 1
    assert nodes[0] == a and nodes[-1] == a + length
    assert np.all(np.diff(nodes) > 0)


def test_ratios_match_history():
    res = solve_fredholm(FredholmProblem(0, 1, 1.0, XY_QUARTER), 32, 1e-10)
    h = res.history
    np.testing.assert_allclose(res.ratios, [h[i] / h[i - 1] for i in range(1, len(h))])
    assert math.isclose(res.empirical_rate, max(res.ratios))


def test_rate_ignores_rounding_dominated_updates():
    p = FredholmProblem(0.0, 2.0, 0.3, AffineKernel(ONE, Sinusoid(1.0, 1.0, 0.5), 1.2))
    res = solve_fredholm(p, 128, 1e-14)
    floor = RATE_FLOOR * res.solution.max_norm()
    tail = res.ratios[np.asarray(res.history[1:]) <= floor]
    assert len(tail) > 0
    assert res.empirical_rate == pytest.approx(0.72, abs=1e-6)
