"""Dynamical phase transitions of a quenched boson bath: return rates,
Fisher zeros, critical scaling, spin dephasing and membrane mode data.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    RateSeries,
    ThermalState,
    decoherence_rate,
    fid_series,
    geometric_phase,
    loschmidt_modulus,
    rate_series,
    return_rate,
    return_rate_complex,
    return_rate_complex_derivative,
    return_rate_derivative,
)
from .errors import BracketError, ConfigError, DomainError, RangeError, WindowError  # noqa: E402
from .fisher import FisherZero, Region, crossing_report, find_fisher_zeros, refine_zero, scan_candidates  # noqa: E402
from .membrane import (  # noqa: E402
    MembraneModes,
    MembraneParams,
    anharmonicity_ratio,
    cross_coupling_ratio,
    mode_table,
)
from .numerics import (  # noqa: E402
    FitResult,
    bessel_j,
    bessel_j0_zeros,
    central_derivative,
    compensated_sum,
    linear_fit,
)
from .scaling import (  # noqa: E402
    ScalingFit,
    candidate_critical_times,
    fit_scaling,
    short_time_crossover,
    size_scaling,
    transition_order,
)
from .spectrum import (  # noqa: E402
    ModeSpectrum,
    SpectrumKind,
    build_comb_spectrum,
    build_powerlaw_spectrum,
    from_membrane,
    spectral_density,
)
