"""CSV and JSON artefacts, key=value config files and their content hash."""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = [
    "load_config",
    "parse_config",
    "config_hash",
    "write_csv",
    "read_csv",
    "write_json",
    "csv_text",
    "parse_list",
]


def parse_config(text, source="<string>"):
    """Parse key=value text with [sections] into {section: {key: str}}."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # keys are case sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


def config_hash(config):
    """sha256 of the canonical JSON form of a resolved config mapping."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_list(value, kind=float):
    """'1, 2,3' -> [1.0, 2.0, 3.0]."""
    items = [v.strip() for v in str(value).split(",") if v.strip()]
    if not items:
        raise ConfigError(f"empty list {value!r}")
    try:
        return [kind(v) for v in items]
    except ValueError as exc:
        raise ConfigError(f"bad list {value!r}: {exc}") from exc


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))  # shortest round-trip form


def csv_text(names, columns, header_lines=()):
    cols = [np.asarray(c) for c in columns]
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, names, columns, header_lines=()):
    """Write columns under a header row, preceded by '#' metadata lines."""
    path = Path(path)
    path.write_text(csv_text(names, columns, header_lines))
    return path


def read_csv(path):
    """Columns of a CSV written by write_csv, as float arrays keyed by name."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    names = rows[0]
    data = np.array(rows[1:], dtype=float).reshape(-1, len(names))
    return {name: data[:, i] for i, name in enumerate(names)}


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
