"""Time-domain quantities of the quenched bath: return rate, Loschmidt
modulus, geometric phase and thermal decoherence, on real and complex time.

Mode sums are compensated: pairwise partial sums over fixed blocks of
modes, combined with math.fsum. Each time point is reduced independently with a fixed mode
blocking, so results are bit-identical for any chunking or worker count.
On complex time the phases omega_k * Re z are formed with an error-free
product, which keeps residuals near Fisher zeros at the rounding level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeError
from .membrane import HBAR, K_B
from .numerics import central_derivative

__all__ = [
    "MAX_EXPONENT",
    "ThermalState",
    "RateSeries",
    "return_rate",
    "return_rate_derivative",
    "return_rate_complex",
    "return_rate_complex_derivative",
    "return_rate_complex_with_derivative",
    "loschmidt_modulus",
    "geometric_phase",
    "geometric_phase_derivative",
    "decoherence_rate",
    "rate_series",
    "fid_series",
]

MAX_EXPONENT = 700.0  # cosh(700) is close to the double-precision ceiling
_CHUNK = 1 << 21  # matrix elements per evaluation block
_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """p + e == a * b exactly (Dekker), elementwise."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _sin_cos(hi, lo):
    s, c = np.sin(hi), np.cos(hi)
    return s + c * lo, c - s * lo


_MODE_BLOCK = 512


def _row_sums(matrix):
    """Exactly rounded sum of each row."""
    return np.array([math.fsum(row) for row in matrix.tolist()])


def _block_row_sums(matrix):
    """Pairwise sums over fixed blocks of modes, blocks combined exactly."""
    rows, n = matrix.shape
    if n <= _MODE_BLOCK:
        return _row_sums(matrix)
    full = (n // _MODE_BLOCK) * _MODE_BLOCK
    parts = matrix[:, :full].reshape(rows, -1, _MODE_BLOCK).sum(axis=2)
    if full < n:
        parts = np.concatenate([parts, matrix[:, full:].sum(axis=1, keepdims=True)], axis=1)
    return _row_sums(parts)


def _blocks(n_points, n_modes):
    rows = max(1, _CHUNK // max(1, n_modes))
    return [(i, min(i + rows, n_points)) for i in range(0, n_points, rows)]


def _map_blocks(fn, n_points, n_modes, workers=1):
    blocks = _blocks(n_points, n_modes)
    if workers and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return np.concatenate(parts) if parts else np.empty(0)


def _as_times(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("times must be finite")
    return arr, np.atleast_1d(arr).ravel()


def _finish(arr, values):
    if arr.ndim == 0:
        return float(values[0])
    return values.reshape(arr.shape)


def _real_kernel(omega, weights, t, order):
    """sum_k weights_k * d^order/dt^order (1 - cos omega_k t), exactly rounded."""
    phase = omega[None, :] * t[:, None]
    if order == 0:
        s = np.sin(0.5 * phase)
        terms = (2.0 * weights) * s * s
    else:
        s, c = np.sin(phase), np.cos(phase)
        # d^m/dt^m (1 - cos wt) = -w^m cos(wt + m pi/2)
        trig = {1: s, 2: c, 3: -s, 0: -c}[order % 4]
        terms = (weights * omega ** order) * trig
    return _block_row_sums(terms)


def _evaluate(spectrum, t, order, weights=None, workers=1):
    arr, flat = _as_times(t)
    omega = spectrum.frequencies
    w = spectrum.weights if weights is None else weights

    def block(bounds):
        lo, hi = bounds
        return _real_kernel(omega, w, flat[lo:hi], order)

    return _finish(arr, _map_blocks(block, flat.size, omega.size, workers))


def return_rate(spectrum, t, workers=1):
    """Return rate gamma(t) = sum_k (lambda_k/omega_k)^2 (1 - cos omega_k t).

    `t` may be a scalar or an array; the result has the same shape.
    """
    return _evaluate(spectrum, t, 0, workers=workers)


def return_rate_derivative(spectrum, t, order=1, weights=None, workers=1):
    """Analytic time derivative of the return rate (termwise)."""
    if order < 0:
        raise DomainError("derivative order must be non-negative")
    return _evaluate(spectrum, t, int(order), weights, workers)


def _check_guard(spectrum, z):
    worst = float(np.max(np.abs(np.imag(z)))) if np.size(z) else 0.0
    limit = MAX_EXPONENT / spectrum.omega_max
    if worst > limit:
        raise RangeError(
            f"|Im z| = {worst:.6g} exceeds the admissible maximum {limit:.6g} "
            f"(|Im z| * omega_max <= {MAX_EXPONENT:g})"
        )
    return limit


def _complex_terms(omega, weights, x, y, want):
    """Per-mode terms of gamma ("value") and/or gamma' ("derivative") at x + iy."""
    hi, lo = _two_prod(0.5 * omega[None, :], x[:, None])
    sh, ch = _sin_cos(hi, lo)
    sin_p = 2.0 * sh * ch
    cos_p = 1.0 - 2.0 * sh * sh
    em = np.expm1(np.abs(omega[None, :] * y[:, None]))
    ep = em + 1.0
    sign = np.sign(y)[:, None]
    half = em / (2.0 * ep)  # factored so em * em cannot overflow near the guard
    cosh_m1 = em * half  # cosh psi - 1 without cancellation
    sinh = sign * (em + 2.0) * half
    out = {}
    # rows on the real axis reuse the real-time kernel so both paths agree bitwise
    axis = y == 0.0
    if np.any(axis):
        plain = omega[None, :] * x[axis, None]
    if "value" in want:
        re = weights * (2.0 * sh * sh - cos_p * cosh_m1)
        if np.any(axis):
            s = np.sin(0.5 * plain)
            re[axis] = (2.0 * weights) * s * s
        out["value"] = (re, weights * sin_p * sinh)
    if "derivative" in want:
        scale = weights * omega
        re = scale * sin_p * (cosh_m1 + 1.0)
        if np.any(axis):
            re[axis] = scale * np.sin(plain)
        out["derivative"] = (re, scale * cos_p * sinh)
    return out


def _complex_eval(spectrum, z, want):
    zarr = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(zarr).ravel()
    if not np.all(np.isfinite(flat)):
        raise DomainError("complex time must be finite")
    _check_guard(spectrum, flat)
    omega = spectrum.frequencies
    w = spectrum.weights

    def block(bounds):
        lo, hi = bounds
        terms = _complex_terms(omega, w, flat.real[lo:hi].copy(), flat.imag[lo:hi].copy(), want)
        return np.stack([_block_row_sums(terms[k][0]) + 1j * _block_row_sums(terms[k][1]) for k in want])

    parts = [block(b) for b in _blocks(flat.size, omega.size)]
    values = np.concatenate(parts, axis=1)
    if zarr.ndim == 0:
        return tuple(complex(v[0]) for v in values)
    return tuple(v.reshape(zarr.shape) for v in values)


def return_rate_complex(spectrum, z):
    """Return rate continued to complex time z.

    Raises RangeError when |Im z| * omega_max exceeds MAX_EXPONENT.
    """
    return _complex_eval(spectrum, z, ("value",))[0]


def return_rate_complex_derivative(spectrum, z):
    """d gamma / dz = sum_k (lambda_k/omega_k)^2 omega_k sin(omega_k z)."""
    return _complex_eval(spectrum, z, ("derivative",))[0]


def return_rate_complex_with_derivative(spectrum, z):
    """(gamma(z), gamma'(z)) from one pass over the modes."""
    return _complex_eval(spectrum, z, ("value", "derivative"))


def loschmidt_modulus(spectrum, t):
    """|G(t)| = exp(-gamma(t))."""
    return np.exp(-np.asarray(return_rate(spectrum, t))) if np.ndim(t) else math.exp(
        -return_rate(spectrum, t)
    )


def geometric_phase(spectrum, t, include_linear=False):
    """Total geometric phase sum_k c_k (omega_k t - sin omega_k t); with
    include_linear=False only the oscillating part -sum_k c_k sin omega_k t.
    """
    arr, flat = _as_times(t)
    omega = spectrum.frequencies
    w = spectrum.weights

    def block(bounds):
        lo, hi = bounds
        phase = omega[None, :] * flat[lo:hi, None]
        terms = -w * np.sin(phase)
        if include_linear:
            terms = terms + w * phase
        return _block_row_sums(terms)

    return _finish(arr, _map_blocks(block, flat.size, omega.size))


def geometric_phase_derivative(spectrum, t, include_linear=False):
    """Analytic d/dt of `geometric_phase`."""
    arr, flat = _as_times(t)
    omega = spectrum.frequencies
    w = spectrum.weights

    def block(bounds):
        lo, hi = bounds
        c = np.cos(omega[None, :] * flat[lo:hi, None])
        terms = -(w * omega) * c
        if include_linear:
            terms = terms + w * omega
        return _block_row_sums(terms)

    return _finish(arr, _map_blocks(block, flat.size, omega.size))


@dataclass(frozen=True)
class ThermalState:
    """Bose-Einstein occupations nbar(omega) = 1 / (exp(scale * omega) - 1).

    `scale` is hbar / (k_B T) in the time units of the spectrum it is used
    with; scale = inf is the zero-temperature bath.
    """

    scale: float = math.inf
    n_th: float | None = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("temperature must be non-negative")

    @classmethod
    def zero(cls):
        return cls(math.inf, 0.0)

    @classmethod
    def from_temperature(cls, temperature, hbar=HBAR, k_b=K_B):
        """Physical temperature in kelvin, for spectra in rad/s."""
        if temperature < 0 or not math.isfinite(temperature):
            raise DomainError("temperature must be finite and non-negative")
        if temperature == 0:
            return cls.zero()
        return cls(hbar / (k_b * temperature), None)

    @classmethod
    def from_occupation(cls, n_th, omega0):
        """Temperature fixed by the occupation n_th of a mode at omega0."""
        if n_th < 0 or not math.isfinite(n_th):
            raise DomainError("occupation must be finite and non-negative")
        if omega0 <= 0:
            raise DomainError("reference frequency must be positive")
        if n_th == 0:
            return cls.zero()
        return cls(math.log1p(1.0 / n_th) / omega0, float(n_th))

    def rescaled(self, time_unit):
        """The same bath for a spectrum whose time unit is multiplied by
        `time_unit` (frequencies multiplied by it), e.g. ModeSpectrum.normalized.
        """
        return ThermalState(self.scale / time_unit, self.n_th)

    @property
    def is_zero(self):
        return math.isinf(self.scale)

    def occupation(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.is_zero:
            return np.zeros_like(omega)
        with np.errstate(over="ignore"):
            # far above k_B T / hbar the occupation underflows to 0
            return 1.0 / np.expm1(self.scale * omega)

    def coth_factor(self, omega):
        """coth(hbar omega / 2 k_B T) written as 2 nbar + 1."""
        return 2.0 * self.occupation(omega) + 1.0

    def tag(self, spectrum):
        """Occupation of the spectrum's lowest mode."""
        if self.n_th is not None:
            return float(self.n_th)
        return float(self.occupation(spectrum.frequencies[0]))


def decoherence_rate(spectrum, t, thermal=None, workers=1):
    """Gamma(t) = sum_k (Lambda_k/Omega_k)^2 coth(hbar Omega_k / 2 k_B T) (1 - cos Omega_k t)."""
    thermal = thermal or ThermalState.zero()
    weights = spectrum.weights * thermal.coth_factor(spectrum.frequencies)
    return _evaluate(spectrum, t, 0, weights, workers)


def decoherence_rate_derivative(spectrum, t, thermal=None, order=1):
    thermal = thermal or ThermalState.zero()
    weights = spectrum.weights * thermal.coth_factor(spectrum.frequencies)
    return _evaluate(spectrum, t, int(order), weights)


@dataclass
class RateSeries:
    times: np.ndarray
    gamma: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None
    temperature_tag: float | None = None
    coherence: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def columns(self):
        names = ["t", "gamma"]
        cols = [self.times, self.gamma]
        if self.d1 is not None:
            names += ["d1", "d2"]
            cols += [self.d1, self.d2]
        if self.coherence is not None:
            names.append("coherence")
            cols.append(self.coherence)
        return names, cols

    def to_csv(self, path, header_lines=()):
        from .io import write_csv

        names, cols = self.columns()
        return write_csv(path, names, cols, header_lines)

    @classmethod
    def from_csv(cls, path):
        from .io import read_csv

        data = read_csv(path)
        return cls(
            times=data["t"],
            gamma=data["gamma"],
            d1=data.get("d1"),
            d2=data.get("d2"),
            coherence=data.get("coherence"),
        )


def uniform_grid(start, stop, n_points):
    """Uniform grid including both endpoints."""
    n_points = int(n_points)
    if n_points < 2 or not stop > start:
        raise DomainError("a grid needs n_points >= 2 and stop > start")
    return np.linspace(start, stop, n_points)


def rate_series(spectrum, times, thermal=None, derivatives=True, workers=1):
    """gamma (or Gamma when `thermal` is given) on a uniform grid, with
    finite-difference first and second derivatives.
    """
    times = np.asarray(times, dtype=float)
    if thermal is None:
        gamma = return_rate(spectrum, times, workers=workers)
        tag = None
    else:
        gamma = decoherence_rate(spectrum, times, thermal, workers=workers)
        tag = thermal.tag(spectrum)
    d1 = d2 = None
    if derivatives:
        d1 = central_derivative(times, gamma, 1).values
        d2 = central_derivative(times, gamma, 2).values
    elif times.size > 1:
        central_derivative(times, gamma, 1)  # grid validation only
    return RateSeries(times, gamma, d1, d2, tag, meta=spectrum.metadata())


def fid_series(spectrum, times, thermal=None, initial_coherence=0.5, derivatives=False, workers=1):
    """Free-induction decay of the spin coherence,
    rho_ud(t) = rho_ud(0) exp(-Gamma(t)).

    Populations are constant under pure dephasing and are not returned.
    """
    if not 0.0 <= initial_coherence <= 0.5:
        raise DomainError("initial coherence must lie in [0, 0.5]")
    thermal = thermal or ThermalState.zero()
    series = rate_series(spectrum, times, thermal, derivatives, workers)
    series.coherence = initial_coherence * np.exp(-series.gamma)
    return series
