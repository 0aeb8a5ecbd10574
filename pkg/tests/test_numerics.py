import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dqptlab.errors import DomainError
from dqptlab.numerics import (
    NonFiniteWarning,
    bessel_j,
    bessel_j0_zeros,
    bisect_root,
    central_derivative,
    compensated_sum,
    linear_fit,
)

# first zeros of J0 and J1 at the first zero, from a bisection oracle on the
# power series (mpmath, 30 digits)
ZETA1 = 2.404825557695773
ZETA2 = 5.520078110286311
J1_AT_ZETA1 = 0.5191474972894669


def test_bessel_at_origin():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_bessel_j0_vanishes_at_first_zero():
    assert abs(bessel_j(0, ZETA1)) <= 1e-12


def test_bessel_j1_at_first_zero():
    assert bessel_j(1, ZETA1) == pytest.approx(J1_AT_ZETA1, abs=1e-14)


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_against_mpmath(order):
    xs = np.concatenate([np.linspace(0, 30, 601), np.logspace(1.4, 4, 400)])
    ours = bessel_j(order, xs)
    ref = np.array([float(mpmath.besselj(order, mpmath.mpf(x))) for x in xs])
    assert np.max(np.abs(ours - ref)) <= 1e-12


@pytest.mark.parametrize("x", [-1.0, math.inf, math.nan])
def test_bessel_domain(x):
    with pytest.raises(DomainError):
        bessel_j(0, x)


def test_bessel_order_domain():
    with pytest.raises(DomainError):
        bessel_j(2, 1.0)


def test_bessel_array_shape():
    x = np.linspace(0, 50, 12).reshape(3, 4)
    assert bessel_j(0, x).shape == (3, 4)


@given(st.floats(0.1, 100.0))
def test_j1_is_minus_derivative_of_j0(x):
    h = 1e-5
    d = (bessel_j(0, x + h) - bessel_j(0, x - h)) / (2 * h)
    assert abs(bessel_j(1, x) + d) <= 1e-8


def test_zeros_first_two():
    z = bessel_j0_zeros(2)
    assert z[0] == pytest.approx(ZETA1, abs=1e-13)
    assert z[1] == pytest.approx(ZETA2, abs=1e-13)


def test_zeros_against_mpmath_and_residual():
    z = bessel_j0_zeros(300)
    ref = np.array([float(mpmath.besseljzero(0, k)) for k in (1, 10, 100, 300)])
    assert np.max(np.abs(z[[0, 9, 99, 299]] - ref)) <= 1e-11
    assert np.max(np.abs(bessel_j(0, z))) <= 1e-10


def test_zero_spacing_tends_to_pi():
    z = bessel_j0_zeros(50)
    assert abs((z[49] - z[48]) - math.pi) <= 1e-3


@given(st.integers(2, 400))
def test_zero_gaps(n):
    z = bessel_j0_zeros(n)
    gaps = np.diff(z)
    assert np.all(gaps > 0)
    assert np.all(np.abs(gaps - math.pi) < 0.3)
    tail = np.abs(gaps[3:] - math.pi)  # gaps between zeros 4..n
    assert np.all(np.diff(tail) <= 0)


def test_zero_count_domain():
    with pytest.raises(DomainError):
        bessel_j0_zeros(0)


def test_bisect_root():
    assert bisect_root(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-14)


def test_compensated_sum_examples():
    assert compensated_sum([1e16, 1.0, -1e16]) == 1.0
    assert compensated_sum([]) == 0.0
    assert abs(compensated_sum([0.1] * 10) - 1.0) <= math.ulp(1.0)


def test_compensated_sum_non_finite():
    with pytest.warns(NonFiniteWarning):
        assert math.isnan(compensated_sum([1.0, math.nan]))


@given(st.integers(0, 2**32 - 1))
def test_compensated_sum_permutation(seed):
    rng = np.random.default_rng(seed)
    terms = rng.standard_normal(10_000) * 10.0 ** rng.integers(-8, 8, 10_000)
    total = compensated_sum(terms)
    again = compensated_sum(rng.permutation(terms))
    assert abs(total - again) <= 4 * math.ulp(total)


def test_derivative_of_sine():
    t = np.arange(0, 2, 1e-3)
    d = central_derivative(t, np.sin(t), 1)
    assert d.step == pytest.approx(1e-3)
    assert np.max(np.abs(d.values - np.cos(t))) <= 1e-6


def test_derivative_of_constant_and_ramp():
    t = np.linspace(0, 1, 11)
    assert np.all(central_derivative(t, np.full(11, 3.0), 1).values == 0)
    assert np.max(np.abs(central_derivative(t, 2 * t, 2).values)) <= 1e-9


def test_derivative_errors():
    with pytest.raises(DomainError):
        central_derivative(np.array([0, 1, 3.0]), np.zeros(3), 1)
    with pytest.raises(DomainError):
        central_derivative(np.linspace(0, 1, 4), np.zeros(4), 2)


def test_linear_fit_examples():
    f = linear_fit([0, 1, 2], [1, 3, 5])
    assert (f.slope, f.intercept, f.r_squared) == pytest.approx((2, 1, 1))
    c = linear_fit([0, 1, 2], [4, 4, 4])
    assert c.slope == 0 and c.r_squared == 1


def test_linear_fit_noisy():
    rng = np.random.default_rng(7)
    x = np.linspace(0, 10, 100)
    y = 3 * x + rng.uniform(-1e-6, 1e-6, x.size)
    assert linear_fit(x, y).slope == pytest.approx(3, abs=1e-5)


def test_linear_fit_degenerate():
    with pytest.raises(DomainError):
        linear_fit([1, 1, 1], [1, 2, 3])


@given(
    st.floats(-1e3, 1e3).filter(lambda s: abs(s) > 1e-3),
    st.floats(-1e3, 1e3),
    st.integers(2, 200),
)
def test_linear_fit_exact_data(slope, intercept, n):
    x = np.linspace(-1, 1, n)
    f = linear_fit(x, slope * x + intercept)
    assert f.r_squared == pytest.approx(1.0, abs=1e-12)
    assert f.slope == pytest.approx(slope, rel=1e-12, abs=1e-12)
    assert 0 <= f.r_squared <= 1 and f.window[0] < f.window[1]
