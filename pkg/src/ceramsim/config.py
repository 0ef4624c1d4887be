"""Flat ``key = value`` run configuration.

One key per line, ``#`` starts a comment. Keys are material parameters
(``MaterialParams`` field names), integrator settings, or driver inputs.
Defaults are compiled in; a file overrides them and ``--set`` overrides
the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import matmodel as mm
from .integrator import IntegratorSettings


class ConfigError(ValueError):
    """Bad configuration: unknown key, unparsable value, or invalid physics."""


DRIVER_DEFAULTS = {
    # compaction-curve
    "rho_min": 0.40,
    "rho_max": 0.99,
    "n_points": 60,
    # yield-surface
    "densities": (0.5, 0.7, 0.9),
    "n_samples": 101,
    "temperature_C": 20.0,
    # dilatometer (heat1d reuses the ramp keys when no schedule file is given)
    "ramp_rate": 30.0,
    "T_start": 20.0,
    "T_max": 1200.0,
    "max_dt": 2.0,
    # press
    "stroke_ratio": 12.6 / 22.0,
    "press_duration": 10.0,
    "unload_duration": 1.0,
    "press_viscosity": 1e-12,
    "press_steps": 200,
    # heat1d
    "length": 0.022,
    "n_nodes": 21,
    "heat_dt": 5.0,
    "hold_s": 0.0,
    "schedule": None,
    "t_end": None,
    # point-run
    "program": None,
}

_SETTINGS_KEYS = ("newton_tol", "newton_max_iter", "substep_max_levels", "dt_initial",
                  "viscosity_override", "stress_tol_rel", "outer_max_iter")

_MATERIAL_KEYS = frozenset(mm.MaterialParams.field_names())
_OPTIONAL_FLOAT = {"dt_initial", "viscosity_override", "t_end"}
_OPTIONAL_STR = {"schedule", "program"}


def known_keys() -> list[str]:
    return list(mm.MaterialParams.field_names()) + list(_SETTINGS_KEYS) + list(DRIVER_DEFAULTS)


def _defaults() -> dict:
    out = {}
    p = mm.MaterialParams()
    for k in mm.MaterialParams.field_names():
        out[k] = getattr(p, k)
    s = IntegratorSettings()
    for k in _SETTINGS_KEYS:
        out[k] = getattr(s, k)
    out.update(DRIVER_DEFAULTS)
    return out


def _convert(key: str, raw: str, default):
    text = raw.strip()
    try:
        if key in _OPTIONAL_STR:
            return None if text.lower() in ("", "none") else text
        if key in _OPTIONAL_FLOAT:
            return None if text.lower() in ("", "none") else float(text)
        if key in _MATERIAL_KEYS:
            return float(text)
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, tuple):
            vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
            if not vals:
                raise ValueError("empty list")
            return vals
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for '{key}': {raw!r}") from exc


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_lines(lines, source: str = "<config>") -> dict[str, str]:
    """Raw ``key -> value`` strings from config text; later lines win."""
    out = {}
    for n, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {line.strip()!r}")
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{n}: empty key")
        out[key] = value.strip()
    return out


@dataclass
class RunConfig:
    values: dict = field(default_factory=_defaults)

    @classmethod
    def load(cls, path=None, overrides=()) -> "RunConfig":
        """Defaults, then ``path`` (if given), then ``key=value`` strings in ``overrides``."""
        raw = {}
        if path is not None:
            try:
                with open(path) as fh:
                    raw.update(parse_lines(fh, str(path)))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            raw[k.strip()] = v.strip()
        return cls.from_raw(raw)

    @classmethod
    def from_raw(cls, raw: dict) -> "RunConfig":
        values = _defaults()
        for key, text in raw.items():
            if key not in values:
                raise ConfigError(f"unknown config key '{key}'")
            values[key] = _convert(key, text, values[key])
        cfg = cls(values)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def params(self) -> mm.MaterialParams:
        kw = {k: self.values[k] for k in mm.MaterialParams.field_names()}
        try:
            return mm.MaterialParams(**kw)
        except (mm.ParameterError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def settings(self) -> IntegratorSettings:
        kw = {k: self.values[k] for k in _SETTINGS_KEYS}
        try:
            return replace(IntegratorSettings(), **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        self.params()
        self.settings()
        v = self.values
        if not 0.0 < v["rho_min"] <= v["rho_max"] < 1.0:
            raise ConfigError("density grid needs 0 < rho_min <= rho_max < 1")
        for key in ("n_points", "n_samples", "press_steps"):
            if v[key] < 1:
                raise ConfigError(f"'{key}' must be at least 1")
        if v["n_nodes"] < 3:
            raise ConfigError("'n_nodes' must be at least 3")
        if any(not 0.0 < r < 1.0 for r in v["densities"]):
            raise ConfigError("'densities' must lie in (0, 1)")
        if not 0.0 <= v["stroke_ratio"] < 1.0:
            raise ConfigError("'stroke_ratio' must lie in [0, 1)")
        for key in ("ramp_rate", "max_dt", "press_duration", "unload_duration", "length",
                    "heat_dt"):
            if not (v[key] > 0.0 and math.isfinite(v[key])):
                raise ConfigError(f"'{key}' must be positive and finite")
        if v["press_viscosity"] < 0.0 or v["hold_s"] < 0.0:
            raise ConfigError("'press_viscosity' and 'hold_s' must be non-negative")
        if not v["T_max"] > v["T_start"]:
            raise ConfigError("'T_max' must exceed 'T_start'")
        if v["t_end"] is not None and not v["t_end"] > 0.0:
            raise ConfigError("'t_end' must be positive")

    def dump(self) -> str:
        """Effective configuration as text that ``load`` reads back unchanged."""
        return "".join(f"{k} = {_format(self.values[k])}\n" for k in known_keys())



# -- load programs for point-run --------------------------------------------

_COMPONENTS = ("11", "22", "33", "12", "13", "23")
_SEGMENT_KEYS = ({"duration", "max_dt", "temperature"}
                 | {f"rate_{c}" for c in _COMPONENTS} | {f"stress_{c}" for c in _COMPONENTS})
_INITIAL_KEYS = {"T", "rho_hat"}


def _temperature(text: str, where: str):
    from .integrator import ConstantTemperature, LinearRamp, TableTemperature

    kind, _, rest = text.strip().partition(" ")
    try:
        if kind == "const":
            return ConstantTemperature(float(rest))
        if kind == "ramp":
            return LinearRamp(float(rest))
        if kind == "table":
            pairs = [p.split(":") for p in rest.split(",") if p.strip()]
            return TableTemperature(tuple(float(a) for a, _ in pairs),
                                    tuple(float(b) for _, b in pairs))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad temperature {text!r} ({exc})") from exc
    raise ConfigError(f"{where}: temperature must be 'const T', 'ramp rate' or 'table t:T, ...'")


def load_program(path):
    """Read a load program: an optional ``[initial]`` section then ``[segment ...]`` sections.

    Each segment takes ``duration``, optional ``max_dt`` and ``temperature``,
    and per Voigt component either ``rate_<ij>`` (1/s) or ``stress_<ij>``
    (MPa, reached linearly by the segment end). Components with neither
    are held at zero strain rate. Returns ``(segments, initial)``.
    """
    import configparser

    from .integrator import LoadSegment

    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read program {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc.message.splitlines()[0]}") from exc
    initial, segments = {}, []
    for name in cp.sections():
        sec = cp[name]
        where = f"{path} [{name}]"
        if name == "initial":
            for k in sec:
                if k not in _INITIAL_KEYS:
                    raise ConfigError(f"{where}: unknown key '{k}'")
                initial[k] = _convert(k, sec[k], 0.0)
            continue
        if not name.startswith("segment"):
            raise ConfigError(f"{path}: unknown section [{name}]")
        for k in sec:
            if k not in _SEGMENT_KEYS:
                raise ConfigError(f"{where}: unknown key '{k}'")
        if "duration" not in sec:
            raise ConfigError(f"{where}: 'duration' is required")
        mask, rate, target = [], [], []
        for c in _COMPONENTS:
            if f"rate_{c}" in sec and f"stress_{c}" in sec:
                raise ConfigError(f"{where}: component {c} has both a rate and a stress")
            is_stress = f"stress_{c}" in sec
            mask.append(is_stress)
            rate.append(0.0 if is_stress else _convert(f"rate_{c}", sec.get(f"rate_{c}", "0"), 0.0))
            target.append(_convert(f"stress_{c}", sec[f"stress_{c}"], 0.0) if is_stress else 0.0)
        temp = _temperature(sec["temperature"], where) if "temperature" in sec else None
        try:
            seg = LoadSegment(_convert("duration", sec["duration"], 0.0), tuple(mask), tuple(rate),
                              tuple(target), temp,
                              _convert("max_dt", sec.get("max_dt", "inf"), 0.0))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        segments.append(seg)
    if not segments:
        raise ConfigError(f"{path}: no [segment] sections")
    return segments, initial
