import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volopt.moments import (
    MeasureSpec,
    MomentSequence,
    box_moments,
    empirical_moments,
    localizing_matrix,
    moment_matrix,
    product_moments,
)
from volopt.poly import Polynomial, basis_size, monomial_basis, parse_polynomial


def test_lebesgue_interval_closed_form():
    y = box_moments(MeasureSpec.lebesgue([-1], [1]), 4)
    assert y[(0,)] == 2.0
    assert y[(1,)] == 0.0
    assert y[(2,)] == pytest.approx(2 / 3, abs=1e-15)


def test_closed_form_exact_for_all_exponents():
    lo, hi = np.array([-1.0, -0.5, 0.0]), np.array([1.0, 2.0, 0.3])
    y = box_moments(MeasureSpec.lebesgue(lo, hi), 6)
    for alpha in monomial_basis(3, 6).exps:
        expect = np.prod([(hi[i] ** (e + 1) - lo[i] ** (e + 1)) / (e + 1) for i, e in enumerate(alpha)])
        assert abs(y[tuple(alpha)] - expect) <= 1e-12 * max(1.0, abs(expect))
    yu = box_moments(MeasureSpec.uniform(lo, hi), 6)
    assert np.allclose(yu.values, y.values / np.prod(hi - lo), rtol=1e-12, atol=1e-15)


def test_uniform_mass_and_square_moment():
    assert box_moments(MeasureSpec.uniform([-1], [1]), 2).mass == 1.0
    y = box_moments(MeasureSpec.lebesgue([-1, -1], [1, 1]), 4)
    assert y[(2, 2)] == pytest.approx(4 / 9, abs=1e-15)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (1_000_000, 2))
    assert 4 * np.mean(pts[:, 0] ** 2 * pts[:, 1] ** 2) == pytest.approx(4 / 9, abs=1e-2)


def test_measure_masses():
    assert MeasureSpec.lebesgue([-1, 0], [1, 3]).mass == pytest.approx(6.0)
    prod = MeasureSpec.product(MeasureSpec.uniform([-1], [1]), MeasureSpec.lebesgue([0], [2]))
    assert prod.mass == pytest.approx(2.0)
    with pytest.raises(ValueError):
        MeasureSpec.lebesgue([1], [0])


def test_product_with_dirac_at_origin():
    ya = box_moments(MeasureSpec.dirac([0.0]), 4)
    yx = box_moments(MeasureSpec.lebesgue([-1], [1]), 4)
    yb = product_moments(ya, yx, 4)
    for alpha in monomial_basis(2, 4).exps:
        x_exp, a_exp = alpha
        expect = yx[(x_exp,)] if a_exp == 0 else 0.0
        assert yb[tuple(alpha)] == expect


def test_product_uniform_lebesgue():
    ya = box_moments(MeasureSpec.uniform([-1], [1]), 4)
    yx = box_moments(MeasureSpec.lebesgue([-1], [1]), 4)
    yb = product_moments(ya, yx, 4)
    assert yb[(2, 2)] == pytest.approx(2 / 9, abs=1e-15)
    assert yb.mass == ya.mass * yx.mass


def test_product_is_bilinear():
    rng = np.random.default_rng(2)
    ya1, ya2 = (MomentSequence(2, 4, rng.normal(size=basis_size(2, 4))) for _ in range(2))
    yx1, yx2 = (MomentSequence(1, 4, rng.normal(size=basis_size(1, 4))) for _ in range(2))
    s = 0.7
    lhs = product_moments(MomentSequence(2, 4, s * ya1.values + ya2.values), yx1, 4).values
    rhs = s * product_moments(ya1, yx1, 4).values + product_moments(ya2, yx1, 4).values
    assert np.allclose(lhs, rhs, atol=1e-12)
    lhs = product_moments(ya1, MomentSequence(1, 4, s * yx1.values + yx2.values), 4).values
    rhs = s * product_moments(ya1, yx1, 4).values + product_moments(ya1, yx2, 4).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_product_needs_enough_order():
    with pytest.raises(ValueError):
        product_moments(box_moments(MeasureSpec.uniform([-1], [1]), 2),
                        box_moments(MeasureSpec.uniform([-1], [1]), 4), 4)


def test_moment_matrix_layout():
    rng = np.random.default_rng(4)
    y = MomentSequence(2, 4, rng.normal(size=basis_size(2, 4)))
    M = moment_matrix(y, 2).matrix
    # rows 1, x1, x2, x1^2, x1 x2, x2^2
    assert M[1, 2] == y[(1, 1)]
    assert M[3, 5] == y[(2, 2)]
    assert np.array_equal(M, M.T)


def test_dirac_at_origin_moment_matrix():
    y = box_moments(MeasureSpec.dirac([0.0, 0.0]), 6)
    M = moment_matrix(y, 3).matrix
    expect = np.zeros_like(M)
    expect[0, 0] = 1.0
    assert np.array_equal(M, expect)


def test_localizing_entry_layout():
    rng = np.random.default_rng(5)
    y = MomentSequence(2, 4, rng.normal(size=basis_size(2, 4)))
    b, c = 1.3, 0.4
    p = parse_polynomial(f"{b} x1 - {c} x2^2", ["x1", "x2"])
    L = localizing_matrix(y, p, 1).matrix
    assert L[0, 0] == pytest.approx(b * y[(1, 0)] - c * y[(0, 2)], abs=1e-14)
    assert L[1, 2] == pytest.approx(b * y[(2, 1)] - c * y[(1, 3)], abs=1e-14)


def test_localizing_with_one_is_moment_matrix():
    rng = np.random.default_rng(6)
    y = MomentSequence(3, 6, rng.normal(size=basis_size(3, 6)))
    assert np.array_equal(localizing_matrix(y, Polynomial.constant(3, 1.0), 3).matrix, moment_matrix(y, 3).matrix)


def test_order_too_low():
    y = box_moments(MeasureSpec.uniform([-1], [1]), 3)
    with pytest.raises(ValueError):
        moment_matrix(y, 2)


def test_empirical_moment_matrix_is_psd():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 1, (100_000, 2))
    y = empirical_moments(pts, 6)
    assert moment_matrix(y, 3).min_eigenvalue() >= -1e-3


def test_localizing_psd_on_disk_samples():
    rng = np.random.default_rng(8)
    pts = rng.uniform(-1, 1, (400_000, 2))
    pts = pts[0.25 - pts[:, 0] ** 2 - pts[:, 1] ** 2 >= 0]
    y = empirical_moments(pts, 6)
    p = parse_polynomial("0.25 - x1^2 - x2^2", ["x1", "x2"])
    assert localizing_matrix(y, p, 2).min_eigenvalue() >= -1e-3


def test_probability_moments_bounded():
    y = box_moments(MeasureSpec.uniform([-1, -1], [1, 1]), 8)
    assert y.mass == 1.0
    assert np.max(np.abs(y.values)) <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_bound_by_diagonal_moments(n, d, seed):
    # a PSD moment matrix M_d(y) bounds every moment by y_0 and the pure powers y_{2d e_i}
    rng = np.random.default_rng(seed)
    k = rng.integers(1, 6)
    pts = rng.uniform(-1.5, 1.5, (k, n))
    w = rng.uniform(0.1, 1, k)
    y = sum(wi * empirical_moments(p[None], 2 * d).values for wi, p in zip(w, pts))
    y = MomentSequence(n, 2 * d, y)
    assert moment_matrix(y, d).min_eigenvalue() >= -1e-9 * max(1.0, np.abs(y.values).max())
    bound = max([y.mass] + [y[tuple(2 * d * np.eye(n, dtype=int)[i])] for i in range(n)])
    assert np.max(np.abs(y.values)) <= bound + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_empirical_moments_localizing_psd_on_support(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (50, 2))
    y = empirical_moments(pts, 6)
    for i in range(2):
        g = Polynomial.constant(2, 1.0) - Polynomial.variable(2, i) ** 2
        M = localizing_matrix(y, g, 2)
        assert M.min_eigenvalue() >= -1e-10


def test_pushforward_keeps_mass():
    mu = MeasureSpec.lebesgue([0, -2], [2, 2])
    nu = mu.pushforward_affine(np.array([1.0, 0.0]), np.array([1.0, 2.0]))
    assert nu.mass == pytest.approx(mu.mass)
    lo, hi = nu.bounds()
    assert np.allclose(lo, -1) and np.allclose(hi, 1)
