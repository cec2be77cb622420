import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volopt.dual import argmax_on_certified_set, build_pd2f, integrate_over_x, solve_dual
from volopt.feasible import solve_feasible_set
from volopt.moments import MeasureSpec
from volopt.poly import Polynomial, parse_polynomial
from volopt.problem import SemialgebraicSet, VariableBlocks, VolumeProblem

LEB1 = MeasureSpec.lebesgue([-1], [1])


def test_integrate_pure_moment():
    w = parse_polynomial("x^2", ["x", "a"])
    out = integrate_over_x(w, LEB1)
    assert out.allclose(Polynomial.constant(1, 2 / 3))


def test_integrate_keeps_parameter():
    out = integrate_over_x(parse_polynomial("a x^2", ["x", "a"]), LEB1)
    assert out.allclose(parse_polynomial("0.6666666666666666 a", ["a"]))


def test_integrate_matches_quadrature():
    rng = np.random.default_rng(11)
    names = ["x1", "x2", "a1", "a2"]
    w = parse_polynomial("1 + x1 a1 - 2 x1^2 x2^2 a2 + 0.5 x2^4 + a1 a2 x1^2", names)
    mu = MeasureSpec.lebesgue([-1, -1], [1, 1])
    out = integrate_over_x(w, mu)
    pts = rng.uniform(-1, 1, (1_000_000, 2))
    for a in rng.uniform(-1, 1, (5, 2)):
        z = np.hstack([pts, np.broadcast_to(a, (len(pts), 2))])
        assert out.evaluate(a) == pytest.approx(4 * np.mean(w.evaluate(z)), abs=1e-2)


def test_integrate_rejects_unknown_measure():
    class Fake:
        kind = "gaussian"
        nvars = 1

    with pytest.raises(ValueError):
        integrate_over_x(parse_polynomial("x", ["x", "a"]), Fake())


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.lists(st.floats(-2, 2), min_size=6, max_size=6),
       st.floats(-3, 3))
def test_integrate_is_linear(c1, c2, s):
    w1 = Polynomial.from_coeffs(2, np.array(c1), 2)
    w2 = Polynomial.from_coeffs(2, np.array(c2), 2)
    lhs = integrate_over_x(w1 * s + w2, LEB1)
    rhs = integrate_over_x(w1, LEB1) * s + integrate_over_x(w2, LEB1)
    assert lhs.allclose(rhs, tol=1e-12)


def test_whole_box_beta_is_box_volume():
    s1 = SemialgebraicSet((parse_polynomial("1 - x^2", ["x", "a"]),))
    prob = VolumeProblem(VariableBlocks(("x",), ("a",)), s1)
    dual = solve_dual(prob, d_w=2)
    assert dual.report.status == "optimal"
    assert dual.beta == pytest.approx(2.0, abs=1e-5)


@pytest.fixture(scope="module")
def illustrative_dual(illustrative):
    cert = solve_feasible_set(illustrative)
    return cert, solve_dual(illustrative, cert, d_w=12, backend="clarabel")


def test_illustrative_beta(illustrative_dual):
    _, dual = illustrative_dual
    # upper bound on the true optimum 0.9165, close to the moment side
    assert 0.9165 <= dual.beta <= 1.3


def test_w_at_least_one_on_k1(illustrative_dual):
    _, dual = illustrative_dual
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (200_000, 2))
    pts = pts[0.25 - pts[:, 1] ** 2 - pts[:, 0] ** 2 >= 0][:10_000]
    assert dual.w_value(pts).min() >= 1 - 1e-5


def test_w_nonnegative_on_box(illustrative_dual):
    _, dual = illustrative_dual
    pts = np.random.default_rng(1).uniform(-1, 1, (10_000, 2))
    assert dual.w_value(pts).min() >= -1e-5


def test_beta_dominates_integral_on_certified_set(illustrative_dual):
    cert, dual = illustrative_dual
    a = np.random.default_rng(2).uniform(-1, 1, 5000)
    a = a[cert.contains(a)][:1000]
    assert (dual.beta - dual.integrated_value(a)).min() >= -1e-5


def test_argmax_inside_certified_set(illustrative_dual):
    cert, dual = illustrative_dual
    a, val = argmax_on_certified_set(dual, cert, points_per_dim=2001)
    assert cert.contains(a[0])
    assert val <= dual.beta + 1e-5


def test_degree_bookkeeping(illustrative):
    cert = solve_feasible_set(illustrative)
    with pytest.raises(ValueError):
        build_pd2f(illustrative, cert, d_w=1)
    with pytest.raises(ValueError):
        build_pd2f(illustrative, None, d_w=12)
