"""Bath mode spectra: integer combs, power-law dispersions and membrane modes."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .numerics import compensated_sum

__all__ = [
    "SpectrumKind",
    "ModeSpectrum",
    "SpectralDensityHistogram",
    "build_comb_spectrum",
    "build_powerlaw_spectrum",
    "from_membrane",
    "spectral_density",
]


class SpectrumKind(str, enum.Enum):
    COMB = "Comb"
    POWER_LAW = "PowerLawDispersion"
    MEMBRANE = "Membrane"


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModeSpectrum:
    """Mode frequencies and couplings of a bosonic bath.

    `period_hint` is the natural time unit of the spectrum: the global
    period tau0 for combs, 2*pi/omega0 for power-law dispersions and the
    revival period of a membrane (see `from_membrane`).
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    kind: SpectrumKind
    alpha: float
    beta: float = 1.0
    period_hint: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = _frozen(self.frequencies)
        lam = _frozen(self.couplings)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", lam)
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if w.ndim != 1 or w.size == 0:
            raise DomainError("a spectrum needs at least one mode")
        if lam.shape != w.shape:
            raise DomainError("frequencies and couplings differ in length")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("frequencies must be finite and positive")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise DomainError("couplings must be finite and non-negative")
        if not (np.isfinite(self.period_hint) and self.period_hint > 0):
            raise DomainError("period_hint must be positive")

    @property
    def size(self):
        return int(self.frequencies.size)

    @property
    def weights(self):
        """Per-mode displacement weights (lambda_k / omega_k)**2."""
        return (self.couplings / self.frequencies) ** 2

    @property
    def total_weight(self):
        return compensated_sum(self.weights)

    @property
    def omega_max(self):
        return float(self.frequencies[-1])

    def normalized(self):
        """Same physics with time measured in units of period_hint."""
        p = self.period_hint
        return ModeSpectrum(
            self.frequencies * p,
            self.couplings * p,
            self.kind,
            self.alpha,
            self.beta,
            1.0,
            dict(self.meta, time_unit=p),
        )

    def scaled_couplings(self, factor):
        return ModeSpectrum(
            self.frequencies, self.couplings * factor, self.kind, self.alpha,
            self.beta, self.period_hint, dict(self.meta),
        )

    def metadata(self):
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "size": self.size,
            "period_hint": self.period_hint,
            **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str))},
        }

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "alpha": self.alpha,
            "beta": self.beta,
            "size": self.size,
            "period_hint": self.period_hint,
            "frequencies": self.frequencies.tolist(),
            "couplings": self.couplings.tolist(),
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data):
        spec = cls(
            data["frequencies"],
            data["couplings"],
            SpectrumKind(data["kind"]),
            float(data["alpha"]),
            float(data.get("beta", 1.0)),
            float(data["period_hint"]),
        )
        if "size" in data and int(data["size"]) != spec.size:
            raise DomainError("size field disagrees with the mode list")
        return spec

    @classmethod
    def from_json(cls, source):
        """Load from a JSON string or a path to a JSON file."""
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        return cls.from_dict(json.loads(text))


def _power_couplings(w, alpha, scale):
    return scale * w ** (alpha / 2.0)


def build_comb_spectrum(n_modes, tau0=1.0, alpha=0.0, coupling_scale=1.0):
    """Integer comb omega_k = 2*pi*k/tau0, k = 1..n_modes, with
    couplings coupling_scale * omega_k**(alpha/2).
    """
    n_modes = int(n_modes)
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    if not tau0 > 0 or not coupling_scale > 0:
        raise DomainError("tau0 and coupling_scale must be positive")
    k = np.arange(1, n_modes + 1, dtype=float)
    w = (2.0 * np.pi / tau0) * k
    return ModeSpectrum(
        w, _power_couplings(w, alpha, coupling_scale), SpectrumKind.COMB,
        float(alpha), 1.0, float(tau0), {"coupling_scale": coupling_scale},
    )


def build_powerlaw_spectrum(n_modes, omega0=1.0, beta=1.0, alpha=0.0, coupling_scale=1.0):
    """Dispersion omega_k = (k+1)**beta * omega0 for k = 0..n_modes-1."""
    n_modes = int(n_modes)
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    if not beta > 0:
        raise DomainError("beta must be positive")
    if not omega0 > 0:
        raise DomainError("omega0 must be positive")
    period = 2.0 * np.pi / omega0
    # base taken from the stored period so beta = 1 matches the comb bitwise
    k = np.arange(n_modes, dtype=float)
    w = (2.0 * np.pi / period) * (k + 1.0) ** beta
    return ModeSpectrum(
        w, _power_couplings(w, alpha, coupling_scale), SpectrumKind.POWER_LAW,
        float(alpha), float(beta), period, {"coupling_scale": coupling_scale},
    )


def from_membrane(modes):
    """Spectrum of the axisymmetric membrane modes.

    Frequencies are the mode frequencies Omega_n and couplings the spin
    couplings Lambda_n, both in rad/s. The mode spacing Delta is estimated
    from the upper half of the table. Because J0 zeros sit at (n - 1/4) pi,
    the mode phases realign (up to a common quarter-turn per 2*pi/Delta)
    only every 4*pi/Delta; that revival period is used as period_hint, so
    the critical times sit at integer and half-integer multiples of it.
    """
    if len(modes.omega) == 0:
        raise DomainError("membrane mode table is empty")
    delta = modes.delta
    return ModeSpectrum(
        modes.omega, modes.coupling, SpectrumKind.MEMBRANE, 0.0, 1.0,
        4.0 * np.pi / delta, {"delta": delta},
    )


@dataclass(frozen=True)
class SpectralDensityHistogram:
    bin_edges: np.ndarray
    mass: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def total(self):
        return compensated_sum(self.mass)


def spectral_density(spectrum, n_bins):
    """Histogram of J(nu) = sum_k lambda_k**2 delta(nu - omega_k) on
    uniform bins over [0, max omega].
    """
    n_bins = int(n_bins)
    if n_bins < 1:
        raise DomainError("n_bins must be at least 1")
    edges = np.linspace(0.0, spectrum.omega_max, n_bins + 1)
    idx = np.searchsorted(edges, spectrum.frequencies, side="right") - 1
    idx = np.clip(idx, 0, n_bins - 1)
    lam2 = spectrum.couplings ** 2
    mass = np.zeros(n_bins)
    order = np.argsort(idx, kind="stable")
    bounds = np.searchsorted(idx[order], np.arange(n_bins + 1))
    for b in range(n_bins):
        sel = order[bounds[b]:bounds[b + 1]]
        if sel.size:
            mass[b] = compensated_sum(lam2[sel])
    return SpectralDensityHistogram(edges, mass)
