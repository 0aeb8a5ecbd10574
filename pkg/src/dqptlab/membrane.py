"""Axisymmetric normal modes of a clamped, pre-strained circular membrane
coupled to a central spin through a magnetic field gradient.

SI units throughout. Couplings are reported as angular frequencies
(Lambda / hbar) so they can be fed directly to the dynamics routines.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .numerics import bessel_j, bessel_j0_zeros

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
MU_B = 9.2740100783e-24  # J / T
G_E = 2.002319

# monolayer hexagonal boron nitride
HBN_THICKNESS = 3.3e-10  # m
HBN_YOUNG = 270e9  # Pa
HBN_DENSITY_2D = 6.93e-7  # kg / m^2
HBN_STRAIN_FACTOR = 1e7  # strain = factor * (h / R)**2

DEFAULT_GRADIENT = 1e5  # T / m, only rescales the couplings


@dataclass(frozen=True)
class MembraneParams:
    radius: float
    thickness: float = HBN_THICKNESS
    young_modulus: float = HBN_YOUNG
    density_2d: float = HBN_DENSITY_2D
    strain: float = float("nan")
    gradient: float = DEFAULT_GRADIENT
    g_factor: float = G_E
    bohr_magneton: float = MU_B
    poisson: float = 0.0  # accepted for completeness; bending is neglected
    fundamental_target: float | None = None  # Hz

    def __post_init__(self):
        if math.isnan(self.strain):
            object.__setattr__(
                self, "strain", HBN_STRAIN_FACTOR * (self.thickness / self.radius) ** 2
            )
        for name in ("radius", "thickness", "young_modulus", "density_2d", "strain",
                     "gradient", "g_factor", "bohr_magneton"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"membrane parameter {name} must be positive, got {value}")
        if self.strain < 100.0 * (self.thickness / self.radius) ** 2:
            raise DomainError(
                "strain: tension does not dominate bending "
                f"(need strain >= 100 (h/R)^2 = {100 * (self.thickness / self.radius) ** 2:.3g})"
            )

    @property
    def wave_speed(self):
        """sqrt(Y h strain / rho_2D), so Omega_n = zeta_n * wave_speed / R."""
        return math.sqrt(self.young_modulus * self.thickness * self.strain / self.density_2d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def hbn(cls, radius, strain_factor=HBN_STRAIN_FACTOR, **kwargs):
        h = kwargs.get("thickness", HBN_THICKNESS)
        return cls(radius=radius, strain=strain_factor * (h / radius) ** 2, **kwargs)

    @classmethod
    def for_fundamental(cls, frequency_hz, strain_factor=HBN_STRAIN_FACTOR, **kwargs):
        """h-BN membrane whose fundamental mode sits at `frequency_hz`, with
        strain tied to the radius by strain = strain_factor (h/R)^2.
        """
        h = kwargs.get("thickness", HBN_THICKNESS)
        y = kwargs.get("young_modulus", HBN_YOUNG)
        rho = kwargs.get("density_2d", HBN_DENSITY_2D)
        zeta1 = float(bessel_j0_zeros(1)[0])
        omega1 = 2.0 * math.pi * frequency_hz
        # Omega_1 = zeta_1 h sqrt(f Y h / rho) / R^2
        radius = math.sqrt(zeta1 * h * math.sqrt(strain_factor * y * h / rho) / omega1)
        return cls(
            radius=radius, strain=strain_factor * (h / radius) ** 2,
            fundamental_target=frequency_hz, **kwargs,
        )

    @classmethod
    def from_config(cls, mapping):
        """Build from a flat {key: str} mapping (a config-file section)."""
        fields = {f: float(v) for f, v in mapping.items() if f in cls.__dataclass_fields__}
        factor = float(mapping.get("strain_factor", HBN_STRAIN_FACTOR))
        if "radius" not in fields:
            if "fundamental_target" not in fields:
                raise DomainError("membrane config needs radius or fundamental_target")
            target = fields.pop("fundamental_target")
            fields.pop("strain", None)
            return cls.for_fundamental(target, strain_factor=factor, **fields)
        if "strain" not in fields:
            fields["strain"] = factor * (fields.get("thickness", HBN_THICKNESS) / fields["radius"]) ** 2
        return cls(**fields)


@dataclass(frozen=True)
class MembraneModes:
    zeta: np.ndarray
    omega: np.ndarray  # rad/s
    mass: np.ndarray  # kg
    xzpf: np.ndarray  # m
    coupling: np.ndarray  # rad/s
    delta: float  # rad/s
    coupling_joule: np.ndarray | None = None

    def __len__(self):
        return len(self.omega)

    def write_csv(self, path, header_lines=()):
        from .io import write_csv

        n = np.arange(1, len(self) + 1)
        return write_csv(
            path,
            ["n", "zeta", "omega_rad_s", "mass_kg", "xzpf_m", "lambda_rad_s"],
            [n, self.zeta, self.omega, self.mass, self.xzpf, self.coupling],
            header_lines,
        )


def mode_table(params, n_modes):
    """Per-mode frequency, effective mass, zero-point amplitude and spin
    coupling for the first `n_modes` axisymmetric modes.
    """
    n_modes = int(n_modes)
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    zeta = bessel_j0_zeros(n_modes)
    omega = zeta * params.wave_speed / params.radius
    j1 = bessel_j(1, zeta)
    mass = math.pi * params.radius ** 2 * params.density_2d * j1 ** 2
    xzpf = np.sqrt(HBAR / (2.0 * mass * omega))
    lam_joule = params.g_factor * params.bohr_magneton * params.gradient * xzpf
    if n_modes >= 2:
        gaps = np.diff(omega)
        delta = float(np.mean(gaps[len(gaps) // 2:]))
    else:
        # a single mode has no gap; fall back to the asymptotic spacing
        delta = math.pi * params.wave_speed / params.radius
    return MembraneModes(zeta, omega, mass, xzpf, lam_joule / HBAR, delta, lam_joule)


def duffing_rate(params, n, m):
    """chi_nm = (Y h pi / 2 R^2) zeta_n^2 zeta_m^2 J1(zeta_n)^2 J1(zeta_m)^2."""
    zeta = bessel_j0_zeros(max(n, m))
    zn, zm = zeta[n - 1], zeta[m - 1]
    jn, jm = bessel_j(1, zn), bessel_j(1, zm)
    pref = params.young_modulus * params.thickness * math.pi / (2.0 * params.radius ** 2)
    return pref * zn ** 2 * zm ** 2 * jn ** 2 * jm ** 2


def anharmonicity_ratio(params, n, n_occupation):
    """Quartic-to-harmonic energy ratio of mode n in closed form,

        R_n = hbar zeta_n / (8 pi R^3) * strain^(-3/2) / sqrt(Y h rho_2D) * nbar^2.
    """
    n = int(n)
    if n < 1:
        raise DomainError("mode index n starts at 1")
    if n_occupation < 0:
        raise DomainError("occupation must be non-negative")
    zeta = float(bessel_j0_zeros(n)[-1])
    p = params
    return (
        HBAR * zeta / (8.0 * math.pi * p.radius ** 3)
        * p.strain ** -1.5 / math.sqrt(p.young_modulus * p.thickness * p.density_2d)
        * n_occupation ** 2
    )


def cross_coupling_ratio(params, n, m, occ_n, occ_m):
    """Inter-mode quartic coupling over the geometric-mean harmonic energy,

        chi_nm nbar_n x_n nbar_m x_m / (1/2 sqrt(M_n M_m) Omega_n Omega_m).

    Evaluated straight from the mode quantities. Its diagonal comes out
    exactly four times the closed form of `anharmonicity_ratio`.
    """
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise DomainError("mode indices start at 1")
    if occ_n < 0 or occ_m < 0:
        raise DomainError("occupations must be non-negative")
    modes = mode_table(params, max(n, m))
    i, j = n - 1, m - 1
    chi = duffing_rate(params, n, m)
    num = chi * occ_n * modes.xzpf[i] * occ_m * modes.xzpf[j]
    den = 0.5 * math.sqrt(modes.mass[i] * modes.mass[j]) * modes.omega[i] * modes.omega[j]
    return num / den


def cross_coupling_matrix(params, n_modes, occupations):
    """Matrix of cross_coupling_ratio over the first n_modes modes."""
    modes = mode_table(params, n_modes)
    occ = np.asarray(occupations, dtype=float)
    if occ.shape != (n_modes,):
        raise DomainError("need one occupation per mode")
    j1sq = bessel_j(1, modes.zeta) ** 2
    pref = params.young_modulus * params.thickness * math.pi / (2.0 * params.radius ** 2)
    g = modes.zeta ** 2 * j1sq * occ * modes.xzpf / (np.sqrt(modes.mass) * modes.omega)
    return pref * np.outer(g, g) / 0.5


def thermal_occupation(omega, temperature):
    """Bose-Einstein occupation of modes at angular frequency omega (rad/s)."""
    omega = np.asarray(omega, dtype=float)
    if temperature < 0:
        raise DomainError("temperature must be non-negative")
    if temperature == 0:
        return np.zeros_like(omega)
    return 1.0 / np.expm1(HBAR * omega / (K_B * temperature))


def write_params_json(params, path):
    import json

    Path(path).write_text(json.dumps(params.to_dict(), indent=1, sort_keys=True) + "\n")
