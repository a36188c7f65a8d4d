"""Config parsing, table serialisation and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .params import PhysicalParams

__all__ = [
    "ConfigError",
    "ParsedConfig",
    "REQUIRED_KEYS",
    "OPTION_KEYS",
    "parse_config",
    "parse_config_text",
    "bundled_config",
    "format_table",
    "write_table",
    "read_table",
    "atomic_write",
    "write_manifest",
    "manifest_path",
]

REQUIRED_KEYS = ("m", "omega_S", "eta", "omega_c", "gamma_c", "L", "P", "T")
OPTIONAL_PARAM_KEYS = ("omega_0", "Omega_cutoff")
# run options that may also live in a config file (command-line flags win)
OPTION_KEYS = {
    "model": str,
    "grid": str,
    "seed": int,
    "traj": int,
    "dt": float,
    "steps": int,
    "burn_in": float,
    "welch_segment": int,
    "workers": int,
    "adiabatic": "bool",
}


class ConfigError(ValueError):
    """Config problem; ``details`` is a JSON-friendly dict."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


@dataclass(frozen=True)
class ParsedConfig:
    params: PhysicalParams
    options: dict = field(default_factory=dict)
    source: str = ""
    values: dict = field(default_factory=dict)  # raw key -> text, for the manifest


def _parse_float(key: str, text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {text!r}",
                          key=key, line=lineno) from None
    if math.isnan(value):
        raise ConfigError(f"line {lineno}: {key} is NaN", key=key, line=lineno)
    return value


def _parse_option(key: str, text: str, lineno: int):
    kind = OPTION_KEYS[key]
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {lineno}: {key} expects true/false, got {text!r}", key=key, line=lineno)
    if kind is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} expects an integer, got {text!r}",
                              key=key, line=lineno) from None
    if kind is float:
        return _parse_float(key, text, lineno)
    return text


def parse_config_text(text: str, source: str = "<string>") -> ParsedConfig:
    """Strict ``key = value`` parser; ``#`` starts a comment."""
    seen: dict[str, int] = {}
    raw: dict[str, str] = {}
    numbers: dict[str, float] = {}
    options: dict = {}
    known = set(REQUIRED_KEYS) | set(OPTIONAL_PARAM_KEYS) | set(OPTION_KEYS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}", line=lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value", line=lineno)
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in seen:
            raise ConfigError(
                f"duplicate key {key!r} on lines {seen[key]} and {lineno}",
                key=key, lines=[seen[key], lineno],
            )
        seen[key] = lineno
        raw[key] = value
        if key in OPTION_KEYS:
            options[key] = _parse_option(key, value, lineno)
        else:
            numbers[key] = _parse_float(key, value, lineno)
    missing = [k for k in REQUIRED_KEYS if k not in numbers]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}", missing=missing)
    numbers.setdefault("omega_0", numbers["omega_c"])
    numbers.setdefault("Omega_cutoff", math.inf)
    return ParsedConfig(PhysicalParams(**numbers), options, source, raw)


def parse_config(path) -> ParsedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", path=str(path)) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", path=str(path)) from None
    return parse_config_text(text, str(path))


def bundled_config(name: str) -> ParsedConfig:
    """Load one of the parameter files shipped with the package."""
    ref = resources.files("mirrornoise") / "data" / name
    return parse_config_text(ref.read_text(encoding="utf-8"), f"<bundled {name}>")


# ------------------------------------------------------------------ tables


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (str, np.str_)):
        return str(value)
    return format(float(value), ".17g")


def format_table(columns: dict) -> str:
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n_rows = {len(a) for a in arrays}
    if len(n_rows) != 1:
        raise ValueError("table columns must have equal length")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*arrays):
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def atomic_write(path, data: str | bytes) -> None:
    """Write via a temporary file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, columns: dict) -> str:
    text = format_table(columns)
    atomic_write(path, text)
    return text


def read_table(path) -> dict[str, np.ndarray]:
    """Inverse of ``write_table``.

    Empty cells in numeric columns read as NaN; columns holding any other
    non-numeric text come back as string arrays.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"empty table: {path}")
    names, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(names):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) if v != "" else math.nan for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


# ------------------------------------------------------------------ manifest


def manifest_path(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.name + ".manifest.json")


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "mirrornoise": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def write_manifest(out_path, *, command: str, argv: list[str], params: PhysicalParams,
                   options: dict, seed, config_source: str, payload: str | bytes) -> Path:
    blob = payload.encode("utf-8") if isinstance(payload, str) else payload
    record = {
        "output": str(Path(out_path).name),
        "sha256": hashlib.sha256(blob).hexdigest(),
        "command": command,
        "argv": argv,
        "config_source": config_source,
        "params": {k: (repr(v) if isinstance(v, float) and not math.isfinite(v) else v)
                   for k, v in params.as_dict().items()},
        "options": options,
        "seed": seed,
        "versions": _versions(),
        "platform": platform.platform(),
        "executable": sys.executable,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    target = manifest_path(out_path)
    atomic_write(target, json.dumps(record, indent=2, sort_keys=True) + "\n")
    return target
