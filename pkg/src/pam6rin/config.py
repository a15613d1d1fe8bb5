"""Flat ``key = value`` configuration files shared by the sweep and search commands."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


def parse_range(text: str) -> tuple:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    return parse_floats(text)


def parse_floats(text: str) -> tuple:
    vals = tuple(float(v) for v in text.split(",") if v.strip())
    if not vals:
        raise ConfigError("empty list")
    return vals


def parse_names(text: str) -> tuple:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    if not names:
        raise ConfigError("empty constellation list")
    return names


def _int(text: str) -> int:
    return int(float(text)) if "e" in text.lower() else int(text)


@dataclass(frozen=True)
class Key:
    parse: object
    help: str


KEYS = {
    "oma_dbm": Key(parse_range, "OMA grid in dBm, start:step:stop or v1,v2,..."),
    "rin_db_hz": Key(parse_floats, "RIN values in dB/Hz, v1,v2,..."),
    "constellations": Key(parse_names, "cross, reference, optimized or a constellation file path, comma separated"),
    "nep_w_sqrthz": Key(float, "receiver NEP in W/sqrt(Hz)"),
    "bandwidth_hz": Key(float, "noise bandwidth in Hz"),
    "beta": Key(float, "modulation bias (>= 5); excludes extinction_ratio_db"),
    "extinction_ratio_db": Key(float, "extinction ratio in dB, converted to beta"),
    "min_symbol_errors": Key(_int, "Monte Carlo stop after this many symbol errors"),
    "max_trials": Key(_int, "Monte Carlo trial cap per case"),
    "seed": Key(_int, "64-bit base seed"),
    "mc_min_ber": Key(float, "cases whose predicted BER is below this use quadrature only"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = KEYS[key].parse(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    if "beta" in out and "extinction_ratio_db" in out:
        raise ConfigError(f"{source}: give beta or extinction_ratio_db, not both")
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def parse_override(key: str, value: str) -> dict:
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}")
    try:
        return {key: KEYS[key].parse(value)}
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
