"""Unit handling at the configuration boundary.

Internally everything is SI with angular frequencies in rad/s.  Strings such
as ``"31.2 mT"`` or ``"16.7 kHz"`` are converted here and nowhere else.
Decimal prefixes are applied in decimal arithmetic and rounded to float once,
so ``to_si("31.2", "mT") == 0.0312`` exactly.
"""

from __future__ import annotations

import math
import re
from decimal import Decimal, InvalidOperation

from .errors import DomainError

_PREFIX = {
    "G": 9, "M": 6, "k": 3, "": 0, "c": -2, "m": -3,
    "u": -6, "µ": -6, "μ": -6, "n": -9, "p": -12,
}

# base unit -> (dimension, extra factor applied after the decimal scaling)
_BASE = {
    "T": ("field", None),
    "s": ("time", None),
    "m": ("length", None),
    "Hz": ("frequency", 2 * math.pi),
    "rad/s": ("frequency", None),
    "Hz/T": ("gyromagnetic", 2 * math.pi),
    "rad/s/T": ("gyromagnetic", None),
    "m^-3": ("density", None),
    "rad": ("angle", None),
    "deg": ("angle", math.pi / 180),
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([^\s\d].*?)?\s*$")


def _split_unit(unit):
    """Return (decimal exponent, base) for a unit such as ``"mT"``."""
    unit = unit.strip()
    if unit in _BASE:
        return 0, unit
    for prefix, exponent in _PREFIX.items():
        base = unit[len(prefix):]
        if prefix and unit.startswith(prefix) and base in _BASE and base != "m^-3":
            return exponent, base
    raise DomainError(f"unknown unit '{unit}'")


def dimension(unit):
    return _BASE[_split_unit(unit)[1]][0]


def _decimal(value):
    if isinstance(value, float):
        value = repr(value)
    try:
        return Decimal(str(value).strip())
    except InvalidOperation:
        raise DomainError(f"not a number: {value!r}") from None


def to_si(value, unit):
    """Convert ``value`` expressed in ``unit`` to SI (angular for frequencies)."""
    exponent, base = _split_unit(unit)
    scaled = float(_decimal(value).scaleb(exponent))
    factor = _BASE[base][1]
    return scaled if factor is None else scaled * factor


def from_si(value, unit):
    """Inverse of :func:`to_si`; exact for decimals with at most 15 digits."""
    exponent, base = _split_unit(unit)
    factor = _BASE[base][1]
    if factor is not None:
        value = value / factor
    return float(_decimal(float(value)).scaleb(-exponent))


def parse_quantity(text, expected):
    """Parse ``"<number> <unit>"`` and return SI, checking the dimension.

    A bare number is taken to be SI already.
    """
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    match = _QUANTITY.match(str(text))
    if not match:
        raise DomainError(f"cannot parse quantity {text!r}")
    number, unit = match.groups()
    if not unit:
        return float(number)
    if dimension(unit) != expected:
        raise DomainError(
            f"unit '{unit}' has dimension {dimension(unit)}, expected {expected}")
    return to_si(number, unit)


_ANGLE = re.compile(rf"^\s*({_NUMBER})?\s*\*?\s*pi\s*(?:/\s*({_NUMBER}))?\s*$")


def parse_angle(text):
    """Parse an angle: a number in rad, ``"45 deg"``, or ``"3pi/2"``-style."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    match = _ANGLE.match(str(text))
    if match:
        num = float(match.group(1)) if match.group(1) else 1.0
        den = float(match.group(2)) if match.group(2) else 1.0
        return num * math.pi / den
    return parse_quantity(text, "angle")


def parse_sweep(text, expected="time"):
    """Parse ``"start:stop:count"`` (inclusive, evenly spaced) into a tuple."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise DomainError(f"sweep must be 'start:stop:count', got {text!r}")
    start = parse_quantity(parts[0], expected)
    stop = parse_quantity(parts[1], expected)
    try:
        count = int(parts[2])
    except ValueError:
        raise DomainError(f"sweep count must be an integer, got {parts[2]!r}") from None
    return start, stop, count
