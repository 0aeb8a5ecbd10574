"""Numerical primitives: Bessel J0/J1 and the zeros of J0, bracketed root
finding, compensated summation, finite differences and least squares.

Everything here is pure and works on plain floats or numpy arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BracketError, DomainError

__all__ = [
    "bessel_j",
    "bessel_j0_zeros",
    "bisect_root",
    "compensated_sum",
    "NonFiniteWarning",
    "central_derivative",
    "Derivative",
    "FitResult",
    "linear_fit",
]

# Series below SERIES_MAX, Miller recurrence up to ASYMPTOTIC_MIN, Hankel beyond.
SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 25.0

_SERIES_TERMS = 40
_HANKEL_TERMS = 24


def _series(order, x):
    q = -0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + order))
        total = total + term
    return total


def _miller(x):
    """J0 and J1 by backward recurrence normalised with J0 + 2*sum(J_2k) = 1."""
    top = 2 * int(math.ceil((float(np.max(x)) + 40.0) / 2.0))
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = None
    for n in range(top, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{n-1}
        if n - 1 == 1:
            j1 = j_cur.copy()
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm = norm + 2.0 * j_cur
    norm = norm + j_cur
    return j_cur / norm, j1 / norm


def _hankel_coeffs(order):
    mu = 4.0 * order * order
    coeffs = [1.0]
    for k in range(1, _HANKEL_TERMS):
        coeffs.append(coeffs[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return coeffs


_HANKEL = {0: _hankel_coeffs(0), 1: _hankel_coeffs(1)}


def _hankel(order, x):
    a = _HANKEL[order]
    inv = 1.0 / x
    # Horner in 1/x^2 for P and Q separately.
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inv2 = inv * inv
    evens = [(-1) ** (k // 2) * a[k] for k in range(0, _HANKEL_TERMS, 2)]
    odds = [(-1) ** (k // 2) * a[k] for k in range(1, _HANKEL_TERMS, 2)]
    for c in reversed(evens):
        p = p * inv2 + c
    for c in reversed(odds):
        q = q * inv2 + c
    q = q * inv
    c, s = np.cos(x), np.sin(x)
    # cos/sin of x - pi/4 (order 0) or x - 3pi/4 (order 1) without forming the shift
    if order == 0:
        cos_chi, sin_chi = (c + s), (s - c)
    else:
        cos_chi, sin_chi = (s - c), -(s + c)
    amp = np.sqrt(2.0 / (np.pi * x)) / math.sqrt(2.0)
    return amp * (p * cos_chi - q * sin_chi)


def bessel_j(order, x):
    """Bessel function of the first kind of order 0 or 1.

    Accurate to about 1e-15 absolute for moderate arguments and better than
    1e-12 up to x = 1e4. Accepts a scalar or an array of non-negative reals.
    """
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {order!r}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("bessel_j needs finite, non-negative arguments")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)

    low = flat <= SERIES_MAX
    mid = (flat > SERIES_MAX) & (flat <= ASYMPTOTIC_MIN)
    high = flat > ASYMPTOTIC_MIN
    if low.any():
        out[low] = _series(order, flat[low])
    if mid.any():
        j0, j1 = _miller(flat[mid])
        out[mid] = j0 if order == 0 else j1
    if high.any():
        out[high] = _hankel(order, flat[high])

    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def bisect_root(f, lo, hi, xtol=1e-15, max_iter=200):
    """Root of a scalar function inside [lo, hi] by bisection.

    The endpoints must straddle a sign change; otherwise BracketError.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= xtol * max(1.0, abs(mid)):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_j0_zeros(count):
    """First `count` positive zeros of J0, in increasing order.

    Each zero is bracketed by ((n - 3/4) pi, (n + 1/4) pi), seeded with the
    McMahon expansion and polished by safeguarded Newton steps (J0' = -J1).
    """
    count = int(count)
    if count < 1:
        raise DomainError("count must be at least 1")
    n = np.arange(1, count + 1, dtype=float)
    lo = (n - 0.75) * np.pi
    hi = (n + 0.25) * np.pi
    flo, fhi = bessel_j(0, lo), bessel_j(0, hi)
    bad = np.nonzero(np.sign(flo) == np.sign(fhi))[0]
    if bad.size:
        raise BracketError(f"no sign change in bracket for zero #{int(bad[0]) + 1}")

    b = (n - 0.25) * np.pi
    z = b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b ** 3)
    z = np.clip(z, lo, hi)
    for _ in range(50):
        j0 = bessel_j(0, z)
        j1 = bessel_j(1, z)
        # keep the bracket tight so a wild Newton step can fall back to bisection
        same_as_lo = np.sign(j0) == np.sign(flo)
        lo = np.where(same_as_lo, z, lo)
        hi = np.where(same_as_lo, hi, z)
        step = j0 / j1
        trial = z + step
        outside = (trial <= lo) | (trial >= hi) | ~np.isfinite(trial)
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        done = np.abs(trial - z) <= 4 * np.finfo(float).eps * z
        z = trial
        if np.all(done):
            break
    return z


class NonFiniteWarning(RuntimeWarning):
    """A summation received a non-finite term."""


def compensated_sum(terms):
    """Sum of floats with compensated (here exactly rounded) accumulation.

    Non-finite input does not raise: the non-finite total is returned and a
    NonFiniteWarning is issued.
    """
    values = np.asarray(terms, dtype=float).ravel()
    if values.size == 0:
        return 0.0
    if not np.all(np.isfinite(values)):
        warnings.warn("non-finite term in compensated_sum", NonFiniteWarning, stacklevel=2)
        return float(np.sum(values))
    return math.fsum(values)


class Derivative(NamedTuple):
    values: np.ndarray
    step: float


def central_derivative(t, y, order=1):
    """First or second derivative of samples on a uniform grid.

    Second-order central differences in the interior and second-order
    one-sided stencils at both ends.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if t.shape != y.shape or t.ndim != 1:
        raise DomainError("t and y must be 1-d arrays of equal length")
    need = 2 * order + 1
    if t.size < need:
        raise DomainError(f"need at least {need} samples for order {order}")
    steps = np.diff(t)
    h = float(steps.mean())
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(abs(h), np.max(np.abs(t))):
        raise DomainError("grid is not uniform")

    out = np.empty_like(y)
    if order == 1:
        out[1:-1] = (y[2:] - y[:-2]) / (2 * h)
        out[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
        out[-1] = (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * h)
    else:
        out[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / h ** 2
        out[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / h ** 2
        out[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / h ** 2
    return Derivative(out, h)


@dataclass(frozen=True)
class FitResult:
    """Ordinary least-squares line y = slope * x + intercept."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int
    window: tuple
    slope_stderr: float = 0.0
    intercept_stderr: float = 0.0

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "window": list(self.window),
            "slope_stderr": self.slope_stderr,
            "intercept_stderr": self.intercept_stderr,
        }


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """OLS fit of ys against xs.

    r_squared is 1 - SS_res/SS_tot, taken as 1 when both vanish (constant,
    exactly fitted data).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("xs and ys must be 1-d and of equal length")
    n = x.size
    if n < 2:
        raise DomainError("need at least two points")
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0 or x.min() == x.max():
        raise DomainError("xs are all equal")
    slope = float(np.dot(dx, y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    ss_res = float(np.dot(resid, resid))
    dy = y - ym
    ss_tot = float(np.dot(dy, dy))
    if ss_tot == 0.0:
        # constant targets: the fit is exact up to rounding
        r2 = 1.0 if ss_res <= 1e-30 * max(1.0, float(ym * ym) * n) else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    if n > 2:
        s2 = ss_res / (n - 2)
        slope_se = math.sqrt(s2 / sxx)
        intercept_se = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    else:
        slope_se = intercept_se = 0.0
    return FitResult(
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        n_points=n,
        window=(float(x.min()), float(x.max())),
        slope_stderr=slope_se,
        intercept_stderr=intercept_se,
    )
