"""Parsing of unit-suffixed quantities used in scenario files.

Values are converted to SI base units (bits, bits/s, Hz, watts, meters, seconds).
"""
from __future__ import annotations

import math
import re

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([A-Za-z/]*)\s*$")

_SCALE = {
    "bits": {"b": 1.0, "bit": 1.0, "kb": 1e3, "mb": 1e6, "gb": 1e9},
    "rate": {"bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "length": {"m": 1.0, "km": 1e3},
    "time": {"s": 1.0, "ms": 1e-3},
    "speed": {"km/h": 1.0 / 3.6, "kmh": 1.0 / 3.6, "m/s": 1.0},
}


class UnitError(ValueError):
    pass


def _split(text: str) -> tuple[float, str]:
    m = _QUANTITY.match(text)
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2)


def parse_quantity(value, kind: str, default_unit: str | None = None) -> float:
    """Convert ``value`` (number or string such as ``"20 MHz"``) to SI units of ``kind``.

    Bare numbers are read in ``default_unit``; if that is None a unit suffix is
    mandatory.
    """
    if kind == "power":
        return parse_power(value)
    table = _SCALE[kind]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if default_unit is None:
            raise UnitError(f"{kind} value {value!r} needs an explicit unit")
        return float(value) * table[default_unit.lower()]
    if not isinstance(value, str):
        raise UnitError(f"expected a {kind} quantity, got {value!r}")
    number, unit = _split(value)
    if not unit:
        if default_unit is None:
            raise UnitError(f"{kind} value {value!r} needs an explicit unit")
        unit = default_unit
    # Mb is megabit; lower-casing would collide MB (byte) with Mb, bytes are not supported
    if "B" in unit:
        raise UnitError(f"byte units are not supported in {value!r}; use bits (b, kb, Mb, Gb)")
    try:
        return number * table[unit.lower()]
    except KeyError:
        raise UnitError(f"unknown {kind} unit {unit!r} in {value!r}") from None


def parse_power(value) -> float:
    """Watts from ``"100 mW"``, ``"20 dBm"``, ``"0.1 W"``; a unit is required."""
    if not isinstance(value, str):
        raise UnitError(f"power {value!r} needs an explicit unit suffix (dBm, mW or W)")
    number, unit = _split(value)
    u = unit.lower()
    if u == "dbm":
        return dbm_to_watts(number)
    if u == "dbw":
        return 10.0 ** (number / 10.0)
    if u == "mw":
        return number * 1e-3
    if u == "w":
        return number
    raise UnitError(f"unknown power unit {unit!r} in {value!r}")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def kmh_to_ms(kmh: float) -> float:
    return kmh / 3.6


def packets_per_slot(rate_bps: float, slot_length: float, packet_size: float) -> int:
    """Whole packets per slot at ``rate_bps``; fractional packets are dropped."""
    return int(math.floor(rate_bps * slot_length / packet_size))
