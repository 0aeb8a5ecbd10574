"""Critical times, critical exponents and the order of the dynamical
transitions.

Times are in units of the spectrum's period_hint throughout. The proximity
to a critical time t_c is tau = (t - t_c) / t_c.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import decoherence_rate, return_rate, return_rate_derivative
from .errors import DomainError, WindowError
from .numerics import FitResult, linear_fit
from .spectrum import SpectrumKind, build_comb_spectrum

__all__ = [
    "ScalingModel",
    "ScalingFit",
    "Crossover",
    "candidate_critical_times",
    "fit_scaling",
    "fit_delta",
    "short_time_crossover",
    "size_scaling",
    "jump_profile",
    "transition_order",
    "kink_metric",
    "ANALYTIC",
]

POINTS_PER_DECADE = 50
DEFAULT_WINDOW = (1e-4, 1e-2)
ANALYTIC = "analytic"
_NOISE = 1e-9


class ScalingModel(str, enum.Enum):
    POWER_LAW = "PowerLaw"
    LOGARITHMIC = "Logarithmic"


@dataclass(frozen=True)
class ScalingFit:
    """Result of fitting |gamma(t) - gamma(t_c)| near a critical time.

    `fit` is the regression of the selected model; `power` (log dgamma vs
    log tau) and `log` (dgamma vs log tau) are both kept, on the same
    samples, so either can be audited.
    """

    t_c: float
    model: ScalingModel
    exponent: float | None
    prefactor: float
    fit: FitResult
    power: FitResult
    log: FitResult
    tau_window: tuple
    n_samples: int
    side: str = "above"
    spectrum_meta: dict = field(default_factory=dict)
    samples: tuple = field(default=(), repr=False, compare=False)  # (tau, dgamma)

    @property
    def r2_power(self):
        return self.power.r_squared

    @property
    def r2_log(self):
        return self.log.r_squared

    def to_dict(self):
        return {
            "t_c": self.t_c,
            "model": self.model.value,
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "r2_power": self.r2_power,
            "r2_log": self.r2_log,
            "window": list(self.tau_window),
            "n_samples": self.n_samples,
            "side": self.side,
            "exponent_stderr": self.power.slope_stderr,
            "spectrum_meta": self.spectrum_meta,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def candidate_critical_times(spectrum, n_periods=1):
    """Critical times within `n_periods` periods, in units of period_hint.

    Combs and power-law spectra revive once per period; membrane spectra
    have critical times at every half period.
    """
    n_periods = int(n_periods)
    if n_periods < 1:
        raise DomainError("n_periods must be at least 1")
    if spectrum.kind == SpectrumKind.MEMBRANE:
        return [0.5 * k for k in range(1, 2 * n_periods + 1)]
    return [float(k) for k in range(1, n_periods + 1)]


def _tau_grid(window, n_samples=None):
    lo, hi = window
    if n_samples is None:
        n_samples = max(10, int(round(POINTS_PER_DECADE * math.log10(hi / lo))) + 1)
    if n_samples < 10:
        raise DomainError("n_samples must be at least 10")
    return np.logspace(math.log10(lo), math.log10(hi), int(n_samples))


def _check_window(spectrum, window):
    lo, hi = float(window[0]), float(window[1])
    bound = max(1.0 / spectrum.size, 1e-10)
    if not lo < hi:
        raise WindowError(f"empty tau window ({lo}, {hi})", lo)
    if lo < bound * (1 - 1e-12):
        raise WindowError(f"tau window starts at {lo:g}, below the finite-size bound 1/N = {bound:g}", lo)
    if hi >= 0.5:
        raise WindowError(f"tau window must end below 0.5, got {hi:g}", hi)
    return lo, hi


def fit_delta(taus, delta, window=None):
    """Fit both models to samples delta(tau) > 0.

    Returns (model, power FitResult, log FitResult); the model with the
    larger r^2 wins, the power law on ties.
    """
    taus = np.asarray(taus, dtype=float)
    delta = np.asarray(delta, dtype=float)
    bad = np.nonzero(~(delta > 0))[0]
    if bad.size:
        t = float(taus[bad[0]])
        raise WindowError(f"delta gamma vanishes at tau = {t:g}; no scaling law can be fitted there", t)
    lt = np.log(taus)
    power = linear_fit(lt, np.log(delta))
    log = linear_fit(lt, delta)
    if window is not None:
        power = _with_window(power, window)
        log = _with_window(log, window)
    model = ScalingModel.LOGARITHMIC if log.r_squared > power.r_squared else ScalingModel.POWER_LAW
    return model, power, log


def _with_window(fit, window):
    d = fit.to_dict()
    d["window"] = tuple(window)
    return FitResult(**d)


def _rate(spectrum, times, thermal):
    if thermal is None:
        return return_rate(spectrum, times)
    return decoherence_rate(spectrum, times, thermal)


def _delta_samples(spectrum, t_c, taus, side, thermal):
    # evaluate on the physical time axis so a ThermalState keeps its units
    p = spectrum.period_hint
    ref = _rate(spectrum, np.array([t_c * p]), thermal)[0]
    signs = {"above": (1.0,), "below": (-1.0,), "both": (1.0, -1.0)}[side]
    all_tau, all_d = [], []
    for s in signs:
        vals = _rate(spectrum, t_c * (1.0 + s * taus) * p, thermal)
        all_tau.append(taus)
        all_d.append(np.abs(vals - ref))
    return np.concatenate(all_tau), np.concatenate(all_d)


def fit_scaling(spectrum, t_c, tau_window=DEFAULT_WINDOW, n_samples=None, thermal=None, side="above"):
    """Critical scaling of the return rate (or, with `thermal`, of the
    decoherence function) near `t_c`.

    Samples dgamma(tau) = |gamma(t_c (1 + tau)) - gamma(t_c)| on a
    log-spaced tau grid (50 points per decade by default) on the chosen side
    of t_c and fits dgamma = A tau^xi and dgamma = a + b ln tau.

    Parameters
    ----------
    spectrum : ModeSpectrum
    t_c : float
        Critical time in units of period_hint.
    tau_window : (float, float)
        Must satisfy 1/N <= low < high < 0.5.
    n_samples : int, optional
        Number of tau values per side (at least 10).
    thermal : ThermalState, optional
        Bath temperature, in the units of the spectrum's frequencies.
    side : {"above", "below", "both"}

    Returns
    -------
    ScalingFit
        With `exponent` = xi for the power law, None for the logarithm.

    Raises
    ------
    WindowError
        If the window is inadmissible or dgamma vanishes at a sample.
    """
    if side not in ("above", "below", "both"):
        raise DomainError(f"side must be above, below or both, got {side!r}")
    if not t_c > 0:
        raise DomainError("t_c must be positive")
    window = _check_window(spectrum, tau_window)
    taus = _tau_grid(window, n_samples)
    tt, delta = _delta_samples(spectrum, t_c, taus, side, thermal)
    model, power, log = fit_delta(tt, delta, window)
    if model == ScalingModel.POWER_LAW:
        chosen, exponent, prefactor = power, power.slope, math.exp(power.intercept)
    else:
        chosen, exponent, prefactor = log, None, log.slope
    meta = spectrum.metadata()
    if thermal is not None:
        meta["n_th"] = thermal.tag(spectrum)
    return ScalingFit(
        float(t_c), model, exponent, prefactor, chosen, power, log,
        window, int(taus.size), side, meta, (tt, delta),
    )


@dataclass(frozen=True)
class Crossover:
    """Short-time (inner) and critical (outer) power laws and where they meet."""

    tau_break: float
    inner_exponent: float
    outer_exponent: float
    inner: FitResult
    outer: FitResult

    def to_dict(self):
        return {
            "tau_break": self.tau_break,
            "inner_exponent": self.inner_exponent,
            "outer_exponent": self.outer_exponent,
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
        }


def short_time_crossover(spectrum, t_c=1.0, n_samples=None):
    """Locate the finite-size crossover of a comb below tau ~ 1/N.

    The power law is fitted on the inner window [0.01/N, 0.1/N], where the
    cosine expansion makes dgamma ~ tau^2, and on the outer window
    [10/N, min(100/N, 0.1)]; the lines intersect at tau_break.
    """
    if spectrum.kind != SpectrumKind.COMB:
        raise DomainError("short_time_crossover needs a comb spectrum")
    n = spectrum.size
    if n <= 100:
        raise DomainError(f"N = {n} leaves no room for an outer window above 10/N; need N > 100")
    inner_w = (1e-2 / n, 1e-1 / n)
    outer_w = (10.0 / n, min(100.0 / n, 0.1))
    fits = []
    for w in (inner_w, outer_w):
        taus = _tau_grid(w, n_samples)
        tt, d = _delta_samples(spectrum, t_c, taus, "above", None)
        bad = np.nonzero(~(d > 0))[0]
        if bad.size:
            raise DomainError(f"dgamma underflows at tau = {tt[bad[0]]:g}; resolution insufficient")
        fits.append(_with_window(linear_fit(np.log(tt), np.log(d)), w))
    inner, outer = fits
    if inner.slope == outer.slope:
        raise DomainError("inner and outer power laws are parallel")
    tau_break = math.exp((outer.intercept - inner.intercept) / (inner.slope - outer.slope))
    return Crossover(tau_break, inner.slope, outer.slope, inner, outer)


def size_scaling(alpha, sizes, tau=1e-3, t_c_index=1, tau0=1.0, coupling_scale=1.0):
    """gamma(t_c (1 + tau)) at t_c = t_c_index * tau0 for combs of each size.

    Returns a list of (size, gamma) pairs.
    """
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise DomainError("sizes must be positive")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("sizes must be strictly increasing")
    t = t_c_index * tau0 * (1.0 + tau)
    out = []
    for n in sizes:
        spec = build_comb_spectrum(n, tau0, alpha, coupling_scale)
        out.append((n, float(return_rate(spec, t))))
    return out


def _deltas(spectrum, n_delta=12):
    base = 2.0 * math.pi / spectrum.normalized().omega_max
    return np.logspace(math.log10(10 * base), math.log10(100 * base), n_delta)


def jump_profile(spectrum, t_c, order, deltas=None, metric="composite"):
    """Discontinuity estimate J_m(delta) of the m-th time derivative at t_c.

    With metric="composite", J_m is the largest of the symmetric difference
    f(t_c + d) - f(t_c - d) and the one-sided differences f(t_c +- d) -
    f(t_c +- 2d). A jump shows in the first, an even divergence (cusp or
    logarithm) only in the others; both make J_m tend to a nonzero limit as
    d -> 0, while a smooth f gives J_m ~ d. metric="symmetric" keeps only
    the symmetric difference, which is blind to even singularities.
    """
    if metric not in ("composite", "symmetric"):
        raise DomainError(f"unknown jump metric {metric!r}")
    spec = spectrum.normalized()
    d = _deltas(spectrum) if deltas is None else np.asarray(deltas, dtype=float)
    pts = np.concatenate([t_c - 2 * d, t_c - d, t_c + d, t_c + 2 * d])
    f = np.asarray(return_rate_derivative(spec, pts, order)).reshape(4, -1)
    m2, m1, p1, p2 = f
    if metric == "symmetric":
        j = np.abs(p1 - m1)
    else:
        j = np.max(np.abs(np.stack([p1 - m1, p1 - p2, m1 - m2])), axis=0)
    # differences at the rounding level of f carry no information
    floor = _NOISE * float(np.max(np.abs(f)))
    return d, np.where(j <= floor, 0.0, j)


def _has_jump(d, j, sigmas=3.0, fraction=0.5):
    fit = linear_fit(d, j)
    scale = float(np.max(j))
    if scale == 0.0:
        return False, fit
    se = fit.intercept_stderr
    return bool(fit.intercept > sigmas * se and fit.intercept > fraction * scale), fit


def transition_order(spectrum, t_c, max_order=3, deltas=None, metric="composite"):
    """Order of the dynamical transition at `t_c`.

    For m = 0..max_order the jump estimate J_m(delta) is regressed linearly
    on delta over delta in [10, 100] * 2 pi / omega_max; the first m whose
    intercept is positive at 3 sigma and holds at least half the largest
    J_m is returned. Returns ANALYTIC when no order qualifies.
    """
    for m in range(int(max_order) + 1):
        d, j = jump_profile(spectrum, t_c, m, deltas, metric)
        jump, _ = _has_jump(d, j)
        if jump:
            return m
    return ANALYTIC


def kink_metric(spectrum, t_c, delta=None):
    """|gamma'(t_c + delta) - gamma'(t_c - delta)| with delta = 10 * 2 pi /
    omega_max by default: the size of a kink in gamma at t_c.
    """
    spec = spectrum.normalized()
    if delta is None:
        delta = 10 * 2.0 * math.pi / spec.omega_max
    a, b = return_rate_derivative(spec, np.array([t_c + delta, t_c - delta]), 1)
    return float(abs(a - b))
