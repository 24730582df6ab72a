import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e as He
from scipy import special

from xmem.hermite import (
    QuadratureError,
    QuadratureSpec,
    gaussian_expectation,
    half_factorial_ratio,
    hermite_coeff,
    hermite_coefficients,
    hermite_eval,
    hermite_normalized,
    hermite_rank,
)

finite_x = st.floats(-6, 6, allow_nan=False)


def _he(n, x):
    c = np.zeros(n + 1)
    c[n] = 1.0
    return He.hermeval(x, c)


@pytest.mark.parametrize("n", range(16))
def test_eval_matches_numpy_hermite_e(n):
    x = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(hermite_eval(n, x), _he(n, x), rtol=1e-12, atol=1e-9)


def test_eval_keeps_scalar_and_longdouble():
    assert hermite_eval(3, 2.0) == pytest.approx(2.0)
    out = hermite_eval(4, np.array([1.5], dtype=np.longdouble))
    assert out.dtype == np.longdouble


def test_eval_rejects_negative_degree():
    with pytest.raises(ValueError):
        hermite_eval(-1, 0.0)


def test_orthogonality_against_gauss_hermite_e_rule():
    x, w = He.hermegauss(60)
    w = w / math.sqrt(2 * math.pi)
    for j in range(13):
        for k in range(13):
            ip = np.sum(w * hermite_eval(j, x) * hermite_eval(k, x))
            want = math.factorial(k) if j == k else 0.0
            # float64 rule: error scales with the size of the products
            assert abs(ip - want) < 1e-14 * math.sqrt(math.factorial(j) * math.factorial(k)) * 100


def test_package_quadrature_orthogonality():
    for j in range(13):
        c = hermite_coefficients(lambda y: hermite_eval(j, y), 12).values
        want = np.zeros(13)
        want[j] = math.factorial(j)
        assert np.max(np.abs(c - want)) < 1e-8


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(scheme="trapezoid")
    with pytest.raises(ValueError):
        QuadratureSpec(node_count=1)


def test_normalized_table_matches_scaled_polynomials():
    x = np.linspace(-4, 4, 9)
    tab = hermite_normalized(10, x)
    for k in range(11):
        np.testing.assert_allclose(tab[k], hermite_eval(k, x) / math.sqrt(math.factorial(k)),
                                   rtol=1e-12, atol=1e-12)


def test_normalized_table_stays_finite_at_high_degree():
    tab = hermite_normalized(3000, np.array([0.3, 5.0]))
    assert np.all(np.isfinite(tab))


def test_monomial_coefficients():
    c = hermite_coefficients(lambda y: y**3, 5).values
    np.testing.assert_allclose(c, [0, 3, 0, 6, 0, 0], atol=1e-10)


@pytest.mark.parametrize("a", [-1.3, 0.0, 0.7, 2.5])
def test_indicator_coefficients_closed_form(a):
    # <1{y > a}, H_k> = phi(a) H_{k-1}(a) for k >= 1
    c = hermite_coefficients(lambda y: (y > a).astype(float), 8, breakpoints=[a]).values
    phi = math.exp(-a * a / 2) / math.sqrt(2 * math.pi)
    assert c[0] == pytest.approx(0.5 * special.erfc(a / math.sqrt(2)), abs=1e-12)
    for k in range(1, 9):
        assert c[k] == pytest.approx(phi * hermite_eval(k - 1, a), abs=1e-11)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_expectation_of_heavy_tailed_transform(alpha):
    got = gaussian_expectation(lambda y: np.exp(y * y / (2 * alpha)))
    assert got == pytest.approx((1 - 1 / alpha) ** -0.5, rel=1e-8)


def test_normalized_coefficients_relation():
    f = lambda y: np.sin(y) + y * y
    raw = hermite_coefficients(f, 6).values
    nrm = hermite_coefficients(f, 6, normalized=True).values
    fact = np.sqrt([math.factorial(k) for k in range(7)])
    np.testing.assert_allclose(nrm, raw / fact, atol=1e-12)


def test_gauss_hermite_rule_agrees_with_adaptive():
    f = lambda y: np.cos(y) * y
    gh = QuadratureSpec(scheme="gauss_hermite", node_count=80)
    np.testing.assert_allclose(hermite_coefficients(f, 6, gh).values,
                               hermite_coefficients(f, 6).values, atol=1e-10)


def test_single_coefficient_and_bad_degree():
    assert hermite_coeff(lambda y: y * y - 1, 2) == pytest.approx(2.0, abs=1e-10)
    with pytest.raises(ValueError):
        hermite_coeff(lambda y: y, -1)
    with pytest.raises(ValueError):
        hermite_coefficients(lambda y: y, -1)


def test_non_finite_integrand_raises():
    with pytest.raises(QuadratureError):
        hermite_coefficients(lambda y: np.exp(y * y), 2)


class TestRank:
    def test_linear(self):
        assert hermite_rank(lambda y: y).rank == 1

    def test_square(self):
        assert hermite_rank(lambda y: y * y - 1).rank == 2

    def test_abs_value(self):
        r = hermite_rank(lambda y: np.abs(y) - math.sqrt(2 / math.pi), breakpoints=[0.0])
        assert r.rank == 2

    def test_cubic_minus_linear(self):
        assert hermite_rank(lambda y: y**3 - 3 * y).rank == 3

    def test_zero_function(self):
        r = hermite_rank(lambda y: np.zeros_like(y), k_max=12)
        assert r.rank is None and r.none_up_to == 12

    def test_uncentered_raises(self):
        with pytest.raises(ValueError):
            hermite_rank(lambda y: y * y)

    def test_k_max_validation(self):
        with pytest.raises(ValueError):
            hermite_rank(lambda y: y, k_max=0)


def test_half_factorial_small_values():
    assert half_factorial_ratio(1) == pytest.approx(0.5)
    assert half_factorial_ratio(2) == pytest.approx(3 / 8)
    with pytest.raises(ValueError):
        half_factorial_ratio(0)


@given(st.integers(1, 400))
def test_half_factorial_matches_binomial(k):
    want = math.comb(2 * k, k) / 4**k
    assert half_factorial_ratio(k) == pytest.approx(want, rel=1e-12)


@given(st.integers(1, 25), finite_x)
def test_parity(n, x):
    assert hermite_eval(n, -x) == pytest.approx((-1) ** n * hermite_eval(n, x), rel=1e-12, abs=1e-9)


@given(st.integers(1, 25), finite_x)
def test_three_term_recurrence(n, x):
    lhs = hermite_eval(n + 1, x)
    rhs = x * hermite_eval(n, x) - n * hermite_eval(n - 1, x)
    scale = max(1.0, abs(x * hermite_eval(n, x)), abs(n * hermite_eval(n - 1, x)))
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(st.integers(1, 20), finite_x)
def test_derivative_identity(n, x):
    c = np.zeros(n + 1)
    c[n] = 1.0
    deriv = He.hermeval(x, He.hermeder(c))
    assert deriv == pytest.approx(n * hermite_eval(n - 1, x), rel=1e-9, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3))
def test_coefficients_of_shifted_linear(b, s):
    c = hermite_coefficients(lambda y: s * y + b, 4).values
    np.testing.assert_allclose(c, [b, s, 0, 0, 0], atol=1e-10)
