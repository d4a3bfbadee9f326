"""
Experiment configuration and artifact reading
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .constants import DEFAULT_A, DEFAULT_ALPHA_LEVEL
from .errors import ConfigError
from .fields import PowerSpectrum, power_law_spectrum, tabulated_spectrum
from .frame import NeedletFrame, frame_from_dict
from .harmonics import SpinCoefficients


@dataclass(frozen=True)
class ExperimentConfig:
    """Every input of a run; to_dict() round-trips through load_config"""
    spin: int = 2
    L: int = 64
    a: float = DEFAULT_A
    b: float = 0.2
    alpha: float = 3.0
    c: float = 1.0
    seed: int = 1234
    n_reps: int = 1000
    j_list: Optional[List[int]] = None
    out: str = "./spinlet-out"
    threads: int = 1
    trials: int = 8
    b_list: Optional[List[float]] = None
    alpha_level: float = DEFAULT_ALPHA_LEVEL
    model_scale: float = 1.0
    pair_distance: float = 0.5
    n_samples: int = 400
    t_list: Optional[List[float]] = None
    spectrum_file: Optional[str] = None

    def __post_init__(self):
        _check(self.L > abs(self.spin), "L", f"must exceed |spin| = {abs(self.spin)}")
        _check(self.a > 1.0, "a", "must exceed 1")
        _check(0.0 < self.b < 1.0, "b", "must lie in (0, 1)")
        _check(self.c >= 0.0, "c", "must be nonnegative")
        _check(0 <= self.seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
        _check(self.n_reps >= 1, "n_reps", "must be positive")
        _check(self.threads >= 1, "threads", "must be positive")
        _check(self.trials >= 1, "trials", "must be positive")
        _check(0.0 < self.alpha_level < 1.0, "alpha_level", "must lie in (0, 1)")
        _check(self.model_scale > 0.0, "model_scale", "must be positive")
        _check(0.0 < self.pair_distance <= math.pi, "pair_distance", "must lie in (0, pi]")
        _check(self.n_samples >= 8, "n_samples", "must be at least 8")
        if self.b_list is not None:
            _check(all(0.0 < b < 1.0 for b in self.b_list), "b_list", "entries must lie in (0, 1)")
        if self.t_list is not None:
            _check(all(t > 0.0 for t in self.t_list), "t_list", "entries must be positive")

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def spectrum(self) -> PowerSpectrum:
        """Power-law spectrum from (alpha, c), or the tabulated spectrum file when one is set"""
        if self.spectrum_file:
            return read_spectrum(Path(self.spectrum_file), self.spin).truncated(self.L)
        return power_law_spectrum(self.spin, self.L, self.alpha, self.c)

    def with_overrides(self, overrides: Dict[str, Any]) -> "ExperimentConfig":
        """Apply CLI flag values; None means the flag was not given"""
        values = {k: v for k, v in overrides.items() if v is not None}
        return _build(dict(self.to_dict(), **values))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check(ok: bool, name: str, message: str) -> None:
    if not ok:
        raise ConfigError(f"config field '{name}' {message}")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INT_FIELDS = {"spin", "L", "seed", "n_reps", "threads", "trials", "n_samples"}
_FLOAT_FIELDS = {"a", "b", "alpha", "c", "alpha_level", "model_scale", "pair_distance"}
_LIST_FIELDS = {"j_list": int, "b_list": float, "t_list": float}
_ALIASES = {"lmax": "L", "reps": "n_reps"}


def _coerce(name: str, value: Any) -> Any:
    try:
        if name in _INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if name in _FLOAT_FIELDS:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
            if not math.isfinite(value):
                raise TypeError
            return value
        if name in _LIST_FIELDS:
            if value is None:
                return None
            if not isinstance(value, (list, tuple)):
                value = [value]
            return [_LIST_FIELDS[name](v) for v in value]
        return None if value is None else str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config field '{name}' has an invalid value: {value!r}")


def _build(raw: Dict[str, Any]) -> ExperimentConfig:
    values = {}
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key '{key}'")
        values[name] = _coerce(name, value)
    return ExperimentConfig(**values)


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a mapping of config values against ExperimentConfig"""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    return _build(raw)


def load_config(path: Path) -> ExperimentConfig:
    """
    Load an experiment configuration from YAML or JSON.

    A manifest written by a previous run is accepted as well: its "config"
    section is used.

    Raises:
        ConfigError: missing file, unparsable content, unknown keys or bad values
    """
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    content = path.read_text(encoding='utf-8')
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(content)
        else:
            data = yaml.safe_load(content)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"could not parse {path}: {e}")
    data = data or {}
    if isinstance(data, dict) and "config" in data and "outputs" in data:
        data = data["config"]
    return config_from_dict(data)


# --- artifacts ------------------------------------------------------------

def read_spectrum(path: Path, spin: int) -> PowerSpectrum:
    """Read a two-column CSV (l, C_l) with a header row; missing shells are zero"""
    if not path.exists():
        raise ConfigError(f"spectrum file not found: {path}")
    table = {}
    with path.open(newline='', encoding='utf-8') as handle:
        for row in csv.DictReader(handle):
            try:
                table[int(row["l"])] = float(row["C_l"])
            except (KeyError, TypeError, ValueError):
                raise ConfigError(f"{path}: spectrum rows need integer 'l' and numeric 'C_l' columns")
    if not table:
        raise ConfigError(f"{path}: spectrum file is empty")
    try:
        return tabulated_spectrum(spin, table)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}")


def read_coefficients(path: Path) -> SpinCoefficients:
    """
    Read coefficients written by write_coefficients.

    The first line is '# ' followed by a JSON header with spin and L; the rest
    is CSV with columns l, m, re, im.
    """
    lines = path.read_text(encoding='utf-8').splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ConfigError(f"{path}: missing coefficient header line")
    try:
        header = json.loads(lines[0].lstrip("#").strip())
        s, L = int(header["spin"]), int(header["L"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise ConfigError(f"{path}: coefficient header must be JSON with 'spin' and 'L'")
    data = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    for row in csv.DictReader(lines[1:]):
        l, m = int(row["l"]), int(row["m"])
        if not (abs(s) <= l <= L and abs(m) <= l):
            raise ConfigError(f"{path}: entry (l={l}, m={m}) is outside the spin-{s} band up to L={L}")
        data[l, m + L] = complex(float(row["re"]), float(row["im"]))
    return SpinCoefficients(s, L, data)


def read_frame(path: Path) -> NeedletFrame:
    """Rebuild a frame from frame.json"""
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
        return frame_from_dict(data)
    except FileNotFoundError:
        raise ConfigError(f"frame file not found: {path}")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid frame file {path}: {e}")

