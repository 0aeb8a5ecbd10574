"""Command-line front end: one subcommand per computation, driven by
key=value config files, writing CSV/JSON data with provenance headers.

Exit codes: 0 success, 2 configuration, 3 I/O, 4 numerical domain/range.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    ThermalState,
    fid_series,
    geometric_phase,
    geometric_phase_derivative,
    rate_series,
    uniform_grid,
)
from .errors import BracketError, ConfigError, DomainError, RangeError, WindowError
from .fisher import MAX_EXPONENT, Region, crossing_report, find_fisher_zeros, min_axis_distance
from .io import config_hash, csv_text, load_config, parse_config, parse_list
from .membrane import MembraneParams, anharmonicity_ratio, cross_coupling_matrix, mode_table
from .scaling import (
    candidate_critical_times,
    fit_delta,
    fit_scaling,
    kink_metric,
    short_time_crossover,
    size_scaling,
    transition_order,
)
from .spectrum import (
    ModeSpectrum,
    build_comb_spectrum,
    build_powerlaw_spectrum,
    from_membrane,
    spectral_density,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("rate", "fid", "geomphase", "fisher", "scaling", "membrane", "spectrum")


@dataclass
class RunManifest:
    subcommand: str
    config_hash: str
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    versions: str = ""

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "config_hash": self.config_hash,
            "outputs": [str(p) for p in self.outputs],
            "wall_time": self.wall_time,
            "versions": self.versions,
        }


def versions():
    return f"dqptlab {__version__}; numpy {np.__version__}; python {platform.python_version()}"


# -- config access -----------------------------------------------------------


class Config:
    """Typed, default-filling view of a parsed config; records what was used."""

    def __init__(self, raw):
        self.raw = raw
        self.resolved = {}

    def get(self, section, key, default=None, kind=float):
        value = self.raw.get(section, {}).get(key)
        if value is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            out = default
        else:
            try:
                out = _convert(value, kind)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"[{section}] {key} = {value!r}: {exc}") from exc
        self.resolved.setdefault(section, {})[key] = out
        return out

    def get_list(self, section, key, default, kind=float):
        value = self.raw.get(section, {}).get(key)
        out = list(default) if value is None else parse_list(value, kind)
        self.resolved.setdefault(section, {})[key] = out
        return out

    def section(self, name):
        return dict(self.raw.get(name, {}))


def _convert(value, kind):
    if kind is bool:
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError("expected a boolean")
    if kind is int:
        f = float(value)
        if f != int(f):
            raise ConfigError("expected an integer")
        return int(f)
    return kind(value.strip()) if kind is str else kind(value)


# -- spectra -----------------------------------------------------------------


def _spectra(cfg):
    """All spectra of the sweep as (tag, ModeSpectrum), in config order."""
    kind = cfg.get("spectrum", "kind", "comb", str).lower()
    if kind == "file":
        path = cfg.get("spectrum", "path", None, str)
        try:
            spec = ModeSpectrum.from_json(Path(path))
        except OSError as exc:
            raise ConfigError(f"cannot read spectrum file {path}: {exc}") from exc
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad spectrum file {path}: {exc}") from exc
        return [("file", spec)]
    sizes = cfg.get_list("spectrum", "n_modes", [1000], int)
    scale = cfg.get("spectrum", "coupling_scale", 1.0)
    out = []
    if kind == "comb":
        tau0 = cfg.get("spectrum", "tau0", 1.0)
        for alpha, n in itertools.product(cfg.get_list("spectrum", "alpha", [0.0]), sizes):
            out.append((f"comb_a{alpha:g}_n{n}", build_comb_spectrum(n, tau0, alpha, scale)))
    elif kind == "powerlaw":
        omega0 = cfg.get("spectrum", "omega0", 1.0)
        alphas = cfg.get_list("spectrum", "alpha", [0.0])
        betas = cfg.get_list("spectrum", "beta", [1.0])
        for alpha, beta, n in itertools.product(alphas, betas, sizes):
            out.append((f"powerlaw_a{alpha:g}_b{beta:g}_n{n}", build_powerlaw_spectrum(n, omega0, beta, alpha, scale)))
    elif kind == "membrane":
        params = _membrane_params(cfg)
        for n in sizes:
            out.append((f"membrane_n{n}", from_membrane(mode_table(params, n))))
    else:
        raise ConfigError(f"unknown spectrum kind {kind!r} (comb, powerlaw, membrane, file)")
    return out


def _membrane_params(cfg):
    section = cfg.section("membrane")
    section.pop("n_modes", None)
    section.pop("ratio_modes", None)
    section.pop("occupation", None)
    if "radius" not in section and "fundamental_target" not in section:
        section["fundamental_target"] = "20e6"
    try:
        params = MembraneParams.from_config(section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[membrane]: {exc}") from exc
    cfg.resolved["membrane"] = params.to_dict()
    return params


def _thermal(cfg, spectrum, n_th=None):
    """ThermalState in the time unit of spectrum.normalized(), or None."""
    if n_th is None:
        temp = cfg.raw.get("thermal", {}).get("temperature")
        if temp is not None:
            t = cfg.get("thermal", "temperature", 0.0)
            return ThermalState.from_temperature(t).rescaled(spectrum.period_hint)
        n_th = cfg.get("thermal", "n_th", 0.0) if "thermal" in cfg.raw else None
    if n_th is None:
        return None
    return ThermalState.from_occupation(n_th, spectrum.normalized().frequencies[0])


# -- subcommands -------------------------------------------------------------


def _header(cfg_hash, spec, extra=()):
    meta = spec.metadata()
    lines = [f"config_hash: {cfg_hash}", f"tool: dqptlab {__version__}"]
    lines += [f"{k}: {meta[k]}" for k in sorted(meta)]
    lines += list(extra)
    return lines


def _grid(cfg):
    return uniform_grid(
        cfg.get("grid", "start", 0.0), cfg.get("grid", "stop", 3.0), cfg.get("grid", "points", 3001, int)
    )


def cmd_rate(cfg, args, coherence=False):
    spectra = _spectra(cfg)
    times = _grid(cfg)
    c0 = cfg.get("fid", "initial_coherence", 0.5) if coherence else None
    jobs = []
    for tag, spec in spectra:
        unit = spec.normalized()
        thermal = _thermal(cfg, spec)
        if coherence:
            series = fid_series(unit, times, thermal, c0, derivatives=True, workers=args.workers)
        else:
            series = rate_series(unit, times, thermal, derivatives=True, workers=args.workers)
            if thermal is not None:
                series.coherence = 0.5 * np.exp(-series.gamma)
        jobs.append((tag, spec, thermal, series))

    def render(h):
        files = {}
        name = "fid" if coherence else "rate"
        for tag, spec, thermal, series in jobs:
            n_th = None if thermal is None else thermal.tag(spec.normalized())
            names, cols = series.columns()
            extra = [f"time_unit: period_hint = {spec.period_hint!r}", f"n_th: {n_th}"]
            files[f"{name}_{tag}.csv"] = csv_text(names, cols, _header(h, spec, extra))
            files[f"{name}_{tag}.json"] = _sidecar(cfg, h, spec, {"n_th": n_th})
        return files

    return render


def cmd_fid(cfg, args):
    return cmd_rate(cfg, args, coherence=True)


def cmd_geomphase(cfg, args):
    spectra = _spectra(cfg)
    times = _grid(cfg)
    linear = args.include_linear or cfg.get("geomphase", "include_linear", False, bool)
    cfg.resolved.setdefault("geomphase", {})["include_linear"] = linear
    jobs = []
    for tag, spec in spectra:
        unit = spec.normalized()
        jobs.append((tag, spec, geometric_phase(unit, times, linear), geometric_phase_derivative(unit, times, linear)))

    def render(h):
        files = {}
        for tag, spec, phase, dphase in jobs:
            head = _header(h, spec, [f"include_linear: {linear}"])
            files[f"geomphase_{tag}.csv"] = csv_text(["t", "phase", "dphase"], [times, phase, dphase], head)
            files[f"geomphase_{tag}.json"] = _sidecar(cfg, h, spec)
        return files

    return render


def _region(cfg, spec):
    guard = MAX_EXPONENT / spec.normalized().omega_max
    vals = []
    for key, default in (("re_lo", 0.5), ("re_hi", 1.5), ("im_lo", None), ("im_hi", None)):
        raw = cfg.raw.get("fisher", {}).get(key)
        if key.startswith("im") and (raw is None or raw.strip() == "auto"):
            v = (-0.9 * guard if key == "im_lo" else 0.9 * guard)
            cfg.resolved.setdefault("fisher", {})[key] = "auto"
        else:
            v = cfg.get("fisher", key, default)
        vals.append(v)
    return Region(*vals).validate()


def cmd_fisher(cfg, args):
    spectra = _spectra(cfg)
    nx = cfg.get("fisher", "nx", 400, int)
    ny = cfg.get("fisher", "ny", 400, int)
    tol = cfg.get("fisher", "axis_tolerance", 1e-6)
    regions = [_region(cfg, spec) for _, spec in spectra]
    jobs = []
    for (tag, spec), region in zip(spectra, regions):
        zeros = find_fisher_zeros(spec, region, nx, ny)
        jobs.append((tag, spec, region, zeros, crossing_report(zeros, tol)))

    def render(h):
        files = {}
        for tag, spec, region, zeros, report in jobs:
            extra = [f"region: {tuple(region)}", f"min_abs_im: {min_axis_distance(zeros)!r}"]
            head = _header(h, spec, extra)
            rows = np.array([f.to_row() for f in zeros]).reshape(-1, 5)
            files[f"zeros_{tag}.csv"] = csv_text(
                ["re_z", "im_z", "residual", "branch", "iterations"],
                [rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3].astype(int), rows[:, 4].astype(int)],
                head,
            )
            files[f"crossings_{tag}.csv"] = csv_text(
                ["branch", "t_crossing", "im_z"],
                [[c.branch for c in report], [c.t_crossing for c in report], [c.im_z for c in report]],
                head,
            )
            files[f"zeros_{tag}.json"] = _sidecar(cfg, h, spec, {"min_abs_im": min_axis_distance(zeros)})
        return files

    return render


def cmd_scaling(cfg, args):
    mode = cfg.get("scaling", "mode", "fit", str)
    handlers = {
        "fit": _scaling_fit,
        "crossover": _scaling_crossover,
        "size": _scaling_size,
        "order": _scaling_order,
        "kink": _scaling_kink,
        "synthetic": _scaling_synthetic,
    }
    if mode not in handlers:
        raise ConfigError(f"unknown [scaling] mode {mode!r} ({', '.join(handlers)})")
    return handlers[mode](cfg, args)


def _critical_times(cfg, spec):
    raw = cfg.raw.get("scaling", {}).get("t_c", "auto").strip()
    if raw == "auto":
        cfg.resolved.setdefault("scaling", {})["t_c"] = "auto"
        return candidate_critical_times(spec, cfg.get("scaling", "n_periods", 1, int))
    return cfg.get_list("scaling", "t_c", [1.0])


def _scaling_fit(cfg, args):
    spectra = _spectra(cfg)
    window = tuple(cfg.get_list("scaling", "window", [1e-4, 1e-2]))
    if len(window) != 2:
        raise ConfigError("[scaling] window needs two values")
    n_samples = cfg.get("scaling", "n_samples", 0, int) or None
    side = cfg.get("scaling", "side", "above", str)
    temps = cfg.get_list("thermal", "n_th", [None]) if "thermal" in cfg.raw else [None]
    results = []
    for tag, spec in spectra:
        for t_c in _critical_times(cfg, spec):
            for n_th in temps:
                thermal = None if n_th is None else ThermalState.from_occupation(n_th, spec.frequencies[0])
                fit = fit_scaling(spec, t_c, window, n_samples, thermal, side)
                results.append((tag, spec, t_c, n_th, fit))

    def render(h):
        files = {}
        records = []
        for tag, spec, t_c, n_th, fit in results:
            rec = fit.to_dict()
            rec["tag"] = tag
            records.append(rec)
            suffix = f"{tag}_tc{t_c:g}" + ("" if n_th is None else f"_nth{n_th:g}")
            head = _header(h, spec, [f"t_c: {t_c!r}", f"model: {fit.model.value}", f"n_th: {n_th}"])
            files[f"scaling_{suffix}.csv"] = csv_text(["tau", "delta_gamma"], list(fit.samples), head)
        files["scaling_fits.json"] = _sidecar(cfg, h, None, {"fits": records})
        return files

    return render


def _scaling_crossover(cfg, args):
    spectra = _spectra(cfg)
    t_c = cfg.get("scaling", "t_c", 1.0)
    results = [(tag, spec, short_time_crossover(spec, t_c)) for tag, spec in spectra]

    def render(h):
        records = [dict(c.to_dict(), tag=tag, spectrum_meta=spec.metadata()) for tag, spec, c in results]
        return {"crossover.json": _sidecar(cfg, h, None, {"crossovers": records})}

    return render


def _scaling_size(cfg, args):
    alphas = cfg.get_list("spectrum", "alpha", [0.0])
    sizes = cfg.get_list("scaling", "sizes", [100, 1000, 10000, 100000], int)
    tau = cfg.get("scaling", "tau", 1e-3)
    index = cfg.get("scaling", "t_c_index", 1, int)
    tau0 = cfg.get("spectrum", "tau0", 1.0)
    scale = cfg.get("spectrum", "coupling_scale", 1.0)
    data = [(a, size_scaling(a, sizes, tau, index, tau0, scale)) for a in alphas]

    def render(h):
        files = {}
        for a, pairs in data:
            head = [f"config_hash: {h}", f"tool: dqptlab {__version__}", f"alpha: {a!r}", f"t_c_index: {index}"]
            files[f"size_a{a:g}.csv"] = csv_text(
                ["size", "tau", "gamma"], [[p[0] for p in pairs], [tau] * len(pairs), [p[1] for p in pairs]], head
            )
        files["size.json"] = _sidecar(cfg, h, None)
        return files

    return render


def _scaling_order(cfg, args):
    spectra = _spectra(cfg)
    metric = cfg.get("scaling", "metric", "composite", str)
    records = []
    for tag, spec in spectra:
        for t_c in _critical_times(cfg, spec):
            records.append({"tag": tag, "t_c": t_c, "order": transition_order(spec, t_c, metric=metric),
                            "spectrum_meta": spec.metadata()})

    def render(h):
        return {"orders.json": _sidecar(cfg, h, None, {"orders": records})}

    return render


def _scaling_kink(cfg, args):
    spectra = _spectra(cfg)
    t_c = cfg.get("scaling", "t_c", 1.0)
    records = [{"tag": tag, "beta": spec.beta, "t_c": t_c, "kink": kink_metric(spec, t_c)} for tag, spec in spectra]

    def render(h):
        return {"kinks.json": _sidecar(cfg, h, None, {"kinks": records})}

    return render


def _scaling_synthetic(cfg, args):
    """Fit a noisy synthetic A tau^xi series (exercises --seed)."""
    xi = cfg.get("scaling", "exponent", 1.0)
    amp = cfg.get("scaling", "prefactor", 1.0)
    noise = cfg.get("scaling", "noise", 0.0)
    window = tuple(cfg.get_list("scaling", "window", [1e-4, 1e-2]))
    rng = np.random.default_rng(args.seed)
    taus = np.logspace(math.log10(window[0]), math.log10(window[1]), 101)
    delta = amp * taus ** xi * (1.0 + noise * rng.standard_normal(taus.size))
    model, power, log = fit_delta(taus, delta, window)

    def render(h):
        head = [f"config_hash: {h}", f"tool: dqptlab {__version__}", f"seed: {args.seed}"]
        rec = {"model": model.value, "exponent": power.slope, "r2_power": power.r_squared, "r2_log": log.r_squared}
        return {
            "synthetic.csv": csv_text(["tau", "delta_gamma"], [taus, delta], head),
            "synthetic.json": _sidecar(cfg, h, None, {"fit": rec}),
        }

    return render


def cmd_membrane(cfg, args):
    params = _membrane_params(cfg)
    n = cfg.get("membrane", "n_modes", 200, int)
    k = cfg.get("membrane", "ratio_modes", 20, int)
    occ = cfg.get("membrane", "occupation", 1.0)
    modes = mode_table(params, n)
    ratios = [anharmonicity_ratio(params, i, occ) for i in range(1, min(k, n) + 1)]
    matrix = cross_coupling_matrix(params, k, np.full(k, occ))

    def render(h):
        head = [f"config_hash: {h}", f"tool: dqptlab {__version__}", f"delta_rad_s: {modes.delta!r}"]
        names = ["n", "zeta", "omega_rad_s", "mass_kg", "xzpf_m", "lambda_rad_s"]
        cols = [np.arange(1, n + 1), modes.zeta, modes.omega, modes.mass, modes.xzpf, modes.coupling]
        extra = {
            "delta_rad_s": modes.delta,
            "anharmonicity_ratio": ratios,
            "cross_coupling_ratio": matrix,
            "occupation": occ,
        }
        return {
            "membrane_modes.csv": csv_text(names, cols, head),
            "membrane_params.json": _sidecar(cfg, h, None, extra),
        }

    return render


def cmd_spectrum(cfg, args):
    spectra = _spectra(cfg)
    bins = cfg.get("spectrum", "bins", 50, int)
    dens = [(tag, spec, spectral_density(spec, bins)) for tag, spec in spectra]

    def render(h):
        files = {}
        for tag, spec, d in dens:
            files[f"spectrum_{tag}.json"] = spec.to_json() + "\n"
            files[f"density_{tag}.csv"] = csv_text(
                ["bin_center", "bin_width", "mass"], [d.centers, d.widths, d.mass], _header(h, spec)
            )
        return files

    return render


def _sidecar(cfg, h, spec, extra=None):
    import json

    from .io import _json_default

    doc = {"config_hash": h, "config": cfg.resolved, "tool": f"dqptlab {__version__}"}
    if spec is not None:
        doc["spectrum"] = spec.metadata()
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n"


HANDLERS = {
    "rate": cmd_rate,
    "fid": cmd_fid,
    "geomphase": cmd_geomphase,
    "fisher": cmd_fisher,
    "scaling": cmd_scaling,
    "membrane": cmd_membrane,
    "spectrum": cmd_spectrum,
}


# -- presets and driver --------------------------------------------------------


def preset_names():
    root = resources.files("dqptlab") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_preset(name):
    root = resources.files("dqptlab") / "presets"
    path = root / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config(path.read_text(), f"preset {name}")


def _write_all(out, files):
    """Write every file via a temporary name, then move them into place."""
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name in sorted(files):
            tmp = out / f".{name}.tmp"
            tmp.write_text(files[name])
            staged.append((tmp, out / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if tmp.exists():
                tmp.unlink()
    return [final for _, final in staged]


def run(command, raw, args):
    """Execute one subcommand on a parsed config; returns the RunManifest."""
    start = time.perf_counter()
    cfg = Config(raw)
    render = HANDLERS[command](cfg, args)
    h = config_hash({"command": command, "config": cfg.resolved, "seed": args.seed})
    files = render(h)
    manifest = RunManifest(command, h, versions=versions())
    manifest.outputs = _write_all(Path(args.out), files)
    manifest.wall_time = time.perf_counter() - start
    import json

    mpath = Path(args.out) / f"manifest_{command}.json"
    mpath.write_text(json.dumps(manifest.to_dict(), indent=1, sort_keys=True) + "\n")
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="dqptlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=versions())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("figure",):
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file with [sections]")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker threads for grid evaluation")
        p.add_argument("--seed", type=int, default=0, help="seed for synthetic data")
        if name == "geomphase":
            p.add_argument("--include-linear", action="store_true", help="keep the linear term")
        if name == "figure":
            p.add_argument("preset", nargs="?", help="preset name")
            p.add_argument("--list", action="store_true", help="list the presets")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.include_linear = getattr(args, "include_linear", False)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        command = args.command
        if command == "figure":
            if args.list or not args.preset:
                print("\n".join(preset_names()))
                return EXIT_OK
            raw = load_preset(args.preset)
            command = raw.get("run", {}).get("command", "")
            if command not in HANDLERS:
                raise ConfigError(f"preset {args.preset} names no valid [run] command")
        else:
            raw = load_config(args.config) if args.config else {}
        manifest = run(command, raw, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, RangeError, WindowError, BracketError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in manifest.outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
