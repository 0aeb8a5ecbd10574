import math

import mpmath
import numpy as np
import pytest

from dqptlab.dynamics import return_rate_complex
from dqptlab.errors import DomainError, RangeError
from dqptlab.fisher import (
    RESIDUAL_TOL,
    FisherZero,
    RefineFailure,
    Region,
    crossing_report,
    find_fisher_zeros,
    min_axis_distance,
    refine_zero,
    scan_candidates,
)
from dqptlab.spectrum import build_comb_spectrum

ORACLE_REGION = (0.1, 1.4, -0.08, 0.08)


def _poly_coefficients(spec):
    """gamma(z) u^N as a polynomial in u = exp(2 pi i z), integer comb with tau0 = 1."""
    c, n = spec.weights, spec.size
    coef = np.zeros(2 * n + 1, dtype=complex)
    coef[n] = c.sum()
    coef[n + 1:] -= 0.5 * c
    coef[:n][::-1] -= 0.5 * c
    return coef


def _oracle_modulus(spec, region, n=4000, rows=250):
    """|gamma| on an n x n grid by Horner evaluation of the polynomial form."""
    coef = _poly_coefficients(spec)
    xs = np.linspace(region[0], region[1], n)
    ys = np.linspace(region[2], region[3], n)
    out = np.empty((n, n))
    for lo in range(0, n, rows):
        u = np.exp(2j * np.pi * (xs[None, :] + 1j * ys[lo:lo + rows, None]))
        p = np.full(u.shape, coef[-1])
        for cj in coef[-2::-1]:
            p = p * u + cj
        out[lo:lo + rows] = np.abs(p / u ** spec.size)
    return xs, ys, out


def _oracle_zeros(spec, region):
    """Interior grid minima of |gamma| (zeros, by the minimum modulus
    principle), polished by mpmath on the direct cosine sum.
    """
    xs, ys, g = _oracle_modulus(spec, region)
    inner = g[1:-1, 1:-1]
    ring = [
        g[1 + di:g.shape[0] - 1 + di, 1 + dj:g.shape[1] - 1 + dj]
        for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj
    ]
    rows, cols = np.nonzero(inner < np.min(ring, axis=0))
    w = [mpmath.mpf(x) for x in spec.frequencies]
    c = [mpmath.mpf(x) for x in spec.weights]

    def newton(z):
        # doubled step once the plain step stagnates, for the double roots at integers
        for _ in range(200):
            g = mpmath.fsum(ci * (1 - mpmath.cos(wi * z)) for wi, ci in zip(w, c))
            dg = mpmath.fsum(ci * wi * mpmath.sin(wi * z) for wi, ci in zip(w, c))
            if abs(g) < mpmath.mpf(10) ** -25 or dg == 0:
                break
            z1, z2 = z - g / dg, z - 2 * g / dg
            g1 = mpmath.fsum(ci * (1 - mpmath.cos(wi * z1)) for wi, ci in zip(w, c))
            g2 = mpmath.fsum(ci * (1 - mpmath.cos(wi * z2)) for wi, ci in zip(w, c))
            z = z1 if abs(g1) <= abs(g2) else z2
        return z

    with mpmath.workdps(30):
        out = [complex(newton(mpmath.mpc(xs[j + 1], ys[i + 1]))) for i, j in zip(rows, cols)]
    return np.array(out)


@pytest.mark.slow
@pytest.mark.parametrize("alpha,n", [(0, 50), (-1, 30), (1, 100)])
def test_scan_completeness_against_grid_oracle(alpha, n):
    spec = build_comb_spectrum(n, alpha=alpha)
    oracle = _oracle_zeros(spec, ORACLE_REGION)
    found = np.array([f.z for f in find_fisher_zeros(spec, ORACLE_REGION)])
    assert oracle.size > 0
    dist = np.min(np.abs(oracle[:, None] - found[None, :]), axis=1)
    assert np.max(dist) <= 1e-4


def test_scan_seed_near_period():
    spec = build_comb_spectrum(100)
    seeds = scan_candidates(spec, (0.5, 1.5, -0.1, 0.1), 400, 400)
    cell = math.hypot(1.0 / max(400, math.ceil(spec.omega_max)), 0.2 / 400)
    assert np.min(np.abs(seeds - 1.0)) <= cell


def test_scan_symmetric_region_conjugation():
    spec = build_comb_spectrum(100)
    seeds = scan_candidates(spec, (0.1, 0.9, -0.05, 0.05), 400, 400)
    cell = math.hypot(0.8 / math.ceil(0.8 * spec.omega_max), 0.1 / 400)
    dist = np.min(np.abs(seeds[:, None] - np.conj(seeds)[None, :]), axis=1)
    assert np.max(dist) <= cell


def test_scan_empty_interior():
    spec = build_comb_spectrum(1000, alpha=1)
    region = (0.1, 0.4, 0.005, 0.05)
    seeds = scan_candidates(spec, region)
    zeros = [f for f in find_fisher_zeros(spec, region) if Region(*region).contains(f.z)]
    assert seeds.size <= 2 and zeros == []


def test_scan_guard_and_degenerate_region():
    spec = build_comb_spectrum(1000)
    with pytest.raises(RangeError, match="admissible"):
        scan_candidates(spec, (0.5, 3.5, -0.2, 0.2))
    with pytest.raises(DomainError):
        scan_candidates(spec, (0.5, 0.5, -0.1, 0.1))
    with pytest.raises(DomainError):
        scan_candidates(spec, (0.5, 1.5, -0.1, 0.1), nx=1)


def test_refine_double_root():
    spec = build_comb_spectrum(100)
    f = refine_zero(spec, 1 + 0.01j)
    assert isinstance(f, FisherZero)
    assert abs(f.z - 1.0) <= 1e-8
    assert f.residual <= RESIDUAL_TOL * spec.total_weight


def test_refine_fixed_point():
    spec = build_comb_spectrum(100, alpha=-1)
    z = [f for f in find_fisher_zeros(spec, (0.2, 0.8, 0.0, 0.1)) if f.z.imag > 0][0]
    again = refine_zero(spec, z.z)
    assert isinstance(again, FisherZero)
    assert again.iterations <= 1 and abs(again.z - z.z) <= 1e-12


def test_refine_failure_far_from_zeros():
    spec = build_comb_spectrum(100)
    f = refine_zero(spec, 0.25 + 0.3j)
    assert isinstance(f, RefineFailure)
    assert f.reason and f.residual > RESIDUAL_TOL * spec.total_weight


@pytest.fixture(scope="module")
def comb_zeros():
    spec = build_comb_spectrum(200, alpha=0)
    return spec, find_fisher_zeros(spec, (0.05, 2.2, -0.06, 0.06))


def test_residual_recheck(comb_zeros):
    spec, zeros = comb_zeros
    z = np.array([f.z for f in zeros])
    res = np.abs(return_rate_complex(spec, z))
    assert np.all(res <= RESIDUAL_TOL * spec.total_weight)


def test_conjugate_closure(comb_zeros):
    _, zeros = comb_zeros
    z = sorted((f.z.real, f.z.imag) for f in zeros)
    zc = sorted((f.z.real, -f.z.imag) for f in zeros)
    assert z == zc


def test_sorted_and_deduplicated(comb_zeros):
    _, zeros = comb_zeros
    keys = [(f.z.real, f.z.imag) for f in zeros]
    assert keys == sorted(keys)
    z = np.array([f.z for f in zeros])
    d = np.abs(z[:, None] - z[None, :]) + np.eye(z.size)
    assert np.min(d) > 1e-6


def test_determinism(comb_zeros):
    spec, zeros = comb_zeros
    again = find_fisher_zeros(spec, (0.05, 2.2, -0.06, 0.06))
    assert [f.to_row() for f in again] == [f.to_row() for f in zeros]


def test_crossings_at_periods(comb_zeros):
    _, zeros = comb_zeros
    report = crossing_report(zeros, 1e-6)
    hits = [c for c in report if c.crossing]
    assert [c.branch for c in hits] == [2, 4]
    assert np.allclose([c.t_crossing for c in hits], [1.0, 2.0], atol=1e-9)


def test_crossing_report_empty_and_errors():
    assert crossing_report([], 1e-6) == []
    assert min_axis_distance([]) == math.inf
    with pytest.raises(DomainError):
        crossing_report([], 0.0)


def test_units_follow_period_hint():
    a = find_fisher_zeros(build_comb_spectrum(60, tau0=1.0), (0.2, 0.8, 0.0, 0.08))
    b = find_fisher_zeros(build_comb_spectrum(60, tau0=3.7), (0.2, 0.8, 0.0, 0.08))
    assert len(a) == len(b)
    assert np.allclose([f.z for f in a], [f.z for f in b], atol=1e-9)
