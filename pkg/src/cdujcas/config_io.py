"""Flat key/value config files for the simulator.

One `key = value` pair per line, `#` starts a comment. Keys are SimConfig
field names. Scalars parse as numbers/booleans, vectors as comma-separated
triples, position lists as semicolon-separated triples; the detection angles
also accept `auto`. See README for the full schema.
"""

from __future__ import annotations

from .exceptions import ConfigError
from .harness import SimConfig


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_vec3(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ConfigError(f"expected three coordinates, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_positions(text: str) -> tuple[tuple[float, float, float], ...]:
    return tuple(_parse_vec3(chunk) for chunk in text.split(";") if chunk.strip())


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ConfigError("empty list value")
    return tuple(float(p) for p in parts)


def _parse_optional_angle(text: str) -> float | None:
    return None if text.strip().lower() == "auto" else float(text)


_PARSERS = {
    "carrier_hz": float,
    "subcarrier_spacing_hz": float,
    "num_subcarriers": int,
    "num_symbols": int,
    "preamble_symbols": int,
    "bs_rows": int,
    "bs_cols": int,
    "user_rows": int,
    "user_cols": int,
    "bs_position_m": _parse_vec3,
    "user_position_m": _parse_vec3,
    "scatterer_positions_m": _parse_positions,
    "scatterer_radial_velocities_mps": _parse_floats,
    "user_radial_velocity_mps": float,
    "reflection_variance_sensing": _parse_floats,
    "reflection_variance_comm": _parse_floats,
    "comm_nlos_enabled": _parse_bool,
    "noise_var_w": float,
    "ul_power_dbm": float,
    "dl_power_dbm": float,
    "qam_order": int,
    "case": int,
    "trials": int,
    "master_seed": int,
    "beamformer_convention": str.strip,
    "detect_azimuth_rad": _parse_optional_angle,
    "detect_elevation_rad": _parse_optional_angle,
    "zero_pad_factor": int,
    "miss_gate_bins": int,
}


def parse_config_text(text: str) -> SimConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](value.strip())
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    config = SimConfig(**values)
    config.validate()
    return config


def load_config(path: str) -> SimConfig:
    """Load a config file; the name `default` yields the built-in defaults."""
    if path == "default":
        return SimConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config_text(text)
