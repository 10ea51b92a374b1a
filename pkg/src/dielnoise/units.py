"""Unit-suffixed quantity parsing for config files.

All internal quantities are SI. Config documents spell out units explicitly
("250um", "1nm", "2pi*1MHz", "40u") so that mixed-scale geometry cannot be
entered ambiguously.
"""
from __future__ import annotations

import math
import re

_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12}
_FREQ = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
_CHARGE = {"C": 1.0, "e": 1.602176634e-19}
_MASS = {"kg": 1.0, "g": 1e-3, "u": 1.66053906660e-27}
_TEMP = {"K": 1.0}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}

_NUM = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]*)\s*$")


class UnitError(ValueError):
    """Raised when a quantity string cannot be parsed or has the wrong unit."""


def _parse(text, table, kind):
    if isinstance(text, (int, float)):
        raise UnitError(f"{kind} quantities must be strings with a unit suffix, got bare number {text!r}")
    m = _NUM.match(text.replace("µm", "um"))
    if not m:
        raise UnitError(f"cannot parse {kind} quantity {text!r}")
    value, suffix = m.groups()
    if suffix not in table:
        raise UnitError(f"unknown {kind} unit {suffix!r} in {text!r} (expected one of {sorted(table)})")
    try:
        return float(value) * table[suffix]
    except ValueError as exc:
        raise UnitError(f"bad number in {text!r}") from exc


def parse_length(text) -> float:
    """'250um' -> 2.5e-4 [m]."""
    return _parse(text, _LENGTH, "length")


def parse_charge(text) -> float:
    """'1e' -> elementary charge [C]; '2.5e-19C' also accepted."""
    return _parse(text, _CHARGE, "charge")


def parse_mass(text) -> float:
    """'40u' -> 40 atomic mass units [kg]."""
    return _parse(text, _MASS, "mass")


def parse_temperature(text) -> float:
    return _parse(text, _TEMP, "temperature")


def parse_time(text) -> float:
    return _parse(text, _TIME, "time")


def parse_frequency(text) -> float:
    """'1MHz' -> 1e6 [Hz] (ordinary frequency, not angular)."""
    return _parse(text, _FREQ, "frequency")


def parse_angular_frequency(text) -> float:
    """Config frequencies are ordinary frequencies; returns omega = 2*pi*f [rad/s]."""
    return 2 * math.pi * parse_frequency(text)


def parse_vector_length(seq) -> tuple[float, float, float]:
    if len(seq) != 3:
        raise UnitError(f"expected a 3-vector of lengths, got {seq!r}")
    return tuple(parse_length(v) for v in seq)
