"""Fisher zeros: complex times z at which the return rate gamma(z) vanishes.

The search works on the spectrum rescaled so that period_hint = 1; every
complex time taken or returned here is in units of period_hint. A sign scan
of Re gamma and Im gamma over a rectangular grid produces seeds, which are
polished by a safeguarded Newton iteration using the analytic derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import MAX_EXPONENT, return_rate_complex, return_rate_complex_with_derivative
from .errors import DomainError, RangeError

__all__ = [
    "Region",
    "FisherZero",
    "RefineFailure",
    "Crossing",
    "scan_candidates",
    "refine_zero",
    "refine_seeds",
    "find_fisher_zeros",
    "crossing_report",
    "min_axis_distance",
]

RESIDUAL_TOL = 1e-10  # relative to sum_k (lambda_k/omega_k)^2
MAX_ITER = 100
DEDUP_RADIUS = 1e-6
_MAX_HALVINGS = 40
MAX_PHASE_STEP = 1.0  # largest omega_max * dx a scan cell may span
_SCAN_BLOCK = 1 << 22


class Region(NamedTuple):
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def validate(self):
        vals = (self.re_lo, self.re_hi, self.im_lo, self.im_hi)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("region bounds must be finite")
        if not (self.re_hi > self.re_lo and self.im_hi > self.im_lo):
            raise DomainError(f"degenerate region {tuple(vals)}")
        return self

    def expanded(self, factor):
        cx, cy = 0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi)
        hx, hy = 0.5 * factor * (self.re_hi - self.re_lo), 0.5 * factor * (self.im_hi - self.im_lo)
        return Region(cx - hx, cx + hx, cy - hy, cy + hy)

    def contains(self, z):
        z = np.asarray(z)
        return (z.real >= self.re_lo) & (z.real <= self.re_hi) & (z.imag >= self.im_lo) & (z.imag <= self.im_hi)

    @property
    def max_abs_im(self):
        return max(abs(self.im_lo), abs(self.im_hi))

    @classmethod
    def around(cls, z, half_width):
        z = complex(z)
        return cls(z.real - half_width, z.real + half_width, z.imag - half_width, z.imag + half_width)


@dataclass(frozen=True)
class FisherZero:
    z: complex
    residual: float
    branch: int
    iterations: int
    conjugate: bool = False  # added by conjugate completion rather than refined

    def to_row(self):
        return [self.z.real, self.z.imag, self.residual, self.branch, self.iterations]


@dataclass(frozen=True)
class RefineFailure:
    seed: complex
    last: complex
    residual: float
    iterations: int
    reason: str


class Crossing(NamedTuple):
    branch: int
    t_crossing: float
    im_z: float
    crossing: bool


def _unit(spectrum):
    return spectrum if spectrum.period_hint == 1.0 else spectrum.normalized()


def _guard(spectrum, im):
    limit = MAX_EXPONENT / spectrum.omega_max
    if im > limit:
        raise RangeError(
            f"|Im z| = {im:.6g} exceeds the admissible maximum {limit:.6g} "
            f"(|Im z| * omega_max <= {MAX_EXPONENT:g})"
        )


def _grid_values(spec, xs, ys):
    """Re and Im of gamma on the tensor grid ys (rows) x xs (columns)."""
    w, c = spec.frequencies, spec.weights
    total = float(np.sum(c))
    re = np.empty((ys.size, xs.size))
    im = np.empty((ys.size, xs.size))
    psi = np.outer(ys, w)
    rc = c * np.cosh(psi)
    rs = c * np.sinh(psi)
    step = max(1, _SCAN_BLOCK // w.size)
    for lo in range(0, xs.size, step):
        phase = np.outer(w, xs[lo:lo + step])
        re[:, lo:lo + step] = total - rc @ np.cos(phase)
        im[:, lo:lo + step] = rs @ np.sin(phase)
    return re, im


def _straddles(v):
    a, b, c, d = v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]
    lo = np.minimum(np.minimum(a, b), np.minimum(c, d))
    hi = np.maximum(np.maximum(a, b), np.maximum(c, d))
    return (lo <= 0) & (hi >= 0)


def scan_candidates(spectrum, region, nx=400, ny=400):
    """Centres of grid cells on which both Re gamma and Im gamma change sign.

    `region` = (re_lo, re_hi, im_lo, im_hi) in units of period_hint. Above
    the zero band gamma is dominated by its fastest modes and both parts
    oscillate on a scale 1/omega_max, so `nx` is raised as needed to keep
    omega_max * dx <= MAX_PHASE_STEP; coarser cells would flag nearly every
    cell. Returns a sorted array of complex seeds.
    """
    region = Region(*region).validate()
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise DomainError("nx and ny must be at least 2")
    spec = _unit(spectrum)
    _guard(spec, region.max_abs_im)
    nx = max(nx, scan_columns(spec, region))
    xs = np.linspace(region.re_lo, region.re_hi, nx + 1)
    ys = np.linspace(region.im_lo, region.im_hi, ny + 1)
    re, im = _grid_values(spec, xs, ys)
    rows, cols = np.nonzero(_straddles(re) & _straddles(im))
    seeds = 0.5 * (xs[cols] + xs[cols + 1]) + 0.5j * (ys[rows] + ys[rows + 1])
    return np.unique(seeds)


def scan_columns(spectrum, region):
    """Smallest number of columns resolving the fastest mode over `region`."""
    spec = _unit(spectrum)
    return int(math.ceil(spec.omega_max * (region[1] - region[0]) / MAX_PHASE_STEP))


def _upper(region, ny):
    """The part of `region` folded into Im z >= 0, with a matching row count."""
    lo, hi = region.im_lo, region.im_hi
    if lo >= 0:
        return region, ny
    if hi <= 0:
        return Region(region.re_lo, region.re_hi, -hi, -lo), ny
    top = max(-lo, hi)
    return Region(region.re_lo, region.re_hi, 0.0, top), max(2, int(math.ceil(ny * top / (hi - lo))))


def _residual(spec, z):
    return np.abs(np.atleast_1d(return_rate_complex(spec, z)))


def refine_seeds(spectrum, seeds, region=None, max_iter=MAX_ITER):
    """Newton refinement of many seeds at once.

    Each step tries the full and the doubled Newton step (the latter restores
    fast convergence at double roots) and keeps the one with the smaller
    residual; when neither reduces it the step is halved. Iterates must stay
    within `region` expanded by a factor 2 (default: a box of half-width
    0.1 around each seed). Returns one FisherZero or RefineFailure per seed.
    """
    spec = _unit(spectrum)
    seeds = np.atleast_1d(np.asarray(seeds, dtype=complex))
    if not np.all(np.isfinite(seeds)):
        raise DomainError("seeds must be finite")
    if seeds.size == 0:
        return []
    total = float(np.sum(spec.weights))
    tol = RESIDUAL_TOL * total
    limit = MAX_EXPONENT / spec.omega_max
    _guard(spec, float(np.max(np.abs(seeds.imag))))
    if region is None:
        half = 0.1
        lo_x, hi_x = seeds.real - half, seeds.real + half
        lo_y, hi_y = seeds.imag - half, seeds.imag + half
    else:
        box = Region(*region).validate().expanded(2.0)
        lo_x = np.full(seeds.size, box.re_lo)
        hi_x = np.full(seeds.size, box.re_hi)
        lo_y = np.full(seeds.size, box.im_lo)
        hi_y = np.full(seeds.size, box.im_hi)

    z = seeds.copy()
    res = _residual(spec, z)
    iters = np.zeros(seeds.size, dtype=int)
    status = np.where(res <= tol, "ok", "")
    status = status.astype(object)

    for _ in range(max_iter):
        act = np.nonzero(status == "")[0]
        if act.size == 0:
            break
        g, dg = return_rate_complex_with_derivative(spec, z[act])
        singular = np.abs(dg) < 1e-30
        status[act[singular]] = "singular derivative"
        keep = ~singular
        act, g, dg = act[keep], g[keep], dg[keep]
        if act.size == 0:
            continue
        iters[act] += 1
        step = g / dg
        best_z = z[act].copy()
        best_r = res[act].copy()
        pending = np.ones(act.size, dtype=bool)
        for _h in range(_MAX_HALVINGS):
            idx = np.nonzero(pending)[0]
            if idx.size == 0:
                break
            base = z[act[idx]]
            trial = np.concatenate([base - step[idx], base - 2.0 * step[idx]])
            inside = np.abs(trial.imag) <= limit
            r = np.full(trial.size, np.inf)
            if inside.any():
                r[inside] = _residual(spec, trial[inside])
            r, trial = r.reshape(2, -1), trial.reshape(2, -1)
            pick = np.argmin(r, axis=0)  # ties keep the plain Newton step
            cols = np.arange(idx.size)
            r_best, z_best = r[pick, cols], trial[pick, cols]
            better = r_best < best_r[idx]
            best_z[idx[better]] = z_best[better]
            best_r[idx[better]] = r_best[better]
            improved = best_r[idx] < res[act[idx]]
            pending[idx[improved]] = False
            step[idx[~improved]] *= 0.5
        stalled = best_r >= res[act]
        status[act[stalled]] = "stalled: residual does not decrease"
        z[act] = best_z
        res[act] = best_r
        a = act[~stalled]
        zz = z[a]
        left = (zz.real < lo_x[a]) | (zz.real > hi_x[a]) | (zz.imag < lo_y[a]) | (zz.imag > hi_y[a])
        status[a[left]] = "left the search region"
        conv = ~left & (res[a] <= tol)
        status[a[conv]] = "ok"
    status[status == ""] = f"no convergence in {max_iter} iterations"

    out = []
    for i in range(seeds.size):
        if status[i] == "ok":
            zi = complex(z[i])
            out.append(FisherZero(zi, float(res[i]), _branch(zi), int(iters[i])))
        else:
            out.append(RefineFailure(complex(seeds[i]), complex(z[i]), float(res[i]), int(iters[i]), status[i]))
    return out


def _branch(z):
    return int(round(z.real / 0.5))


def refine_zero(spectrum, seed, region=None, max_iter=MAX_ITER):
    """Polish one seed; returns a FisherZero or a RefineFailure with the
    reason, the last iterate and its residual.
    """
    return refine_seeds(spectrum, [seed], region, max_iter)[0]


def _dedupe(zeros, radius):
    zeros = sorted(zeros, key=lambda f: (f.z.real, f.z.imag, f.residual))
    kept = []
    for f in zeros:
        dup = False
        for k in reversed(kept):
            if f.z.real - k.z.real > radius:
                break
            if abs(f.z - k.z) <= radius:
                dup = True
                break
        if not dup:
            kept.append(f)
    return kept


def find_fisher_zeros(spectrum, region, nx=400, ny=400, with_failures=False):
    """Scan `region`, refine the seeds and return the distinct zeros.

    Zeros within DEDUP_RADIUS of each other are merged, zeros closer to the
    real axis than DEDUP_RADIUS are placed on it, and every zero off the
    axis is accompanied by its complex conjugate. The list is sorted by
    (Re z, Im z).
    """
    region = Region(*region).validate()
    spec = _unit(spectrum)
    # gamma(conj z) = conj gamma(z): search the upper half plane only
    half, rows = _upper(region, ny)
    seeds = scan_candidates(spec, half, nx, rows)
    results = refine_seeds(spec, seeds, region)
    found, failures = [], []
    for r in results:
        if isinstance(r, RefineFailure):
            failures.append(r)
            continue
        z = r.z
        if abs(z.imag) <= DEDUP_RADIUS:
            z = complex(z.real, 0.0)
            r = FisherZero(z, float(abs(return_rate_complex(spec, z))), r.branch, r.iterations)
        elif z.imag < 0:
            r = FisherZero(z.conjugate(), r.residual, r.branch, r.iterations)
        found.append(r)
    upper = _dedupe(found, DEDUP_RADIUS)
    zeros = list(upper)
    for f in upper:
        if f.z.imag != 0.0:
            zeros.append(FisherZero(f.z.conjugate(), f.residual, f.branch, f.iterations, True))
    zeros.sort(key=lambda f: (f.z.real, f.z.imag))
    if with_failures:
        return zeros, failures
    return zeros


def crossing_report(zeros, axis_tolerance=1e-6):
    """Per branch, the zero closest to the real axis; flagged as a crossing
    when its |Im z| is within `axis_tolerance`.
    """
    if not axis_tolerance > 0:
        raise DomainError("axis_tolerance must be positive")
    best = {}
    for f in zeros:
        cur = best.get(f.branch)
        if cur is None or abs(f.z.imag) < abs(cur.z.imag):
            best[f.branch] = f
    return [
        Crossing(b, best[b].z.real, abs(best[b].z.imag), abs(best[b].z.imag) <= axis_tolerance)
        for b in sorted(best)
    ]


def min_axis_distance(zeros):
    """Smallest |Im z| over a list of zeros (inf when empty)."""
    return min((abs(f.z.imag) for f in zeros), default=math.inf)
