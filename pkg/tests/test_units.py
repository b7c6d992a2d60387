import math

import pytest
from hypothesis import given, strategies as st

from nvcorr.errors import DomainError
from nvcorr.units import (dimension, from_si, parse_angle, parse_quantity, parse_sweep,
                          to_si)


def test_prefixed_field_is_exact():
    assert to_si("31.2", "mT") == 0.0312


def test_hz_becomes_angular():
    assert to_si("1.33", "MHz") == pytest.approx(2 * math.pi * 1.33e6, rel=1e-15)
    assert dimension("kHz") == "frequency"


def test_density_takes_no_prefix():
    with pytest.raises(DomainError):
        to_si("6e22", "cm^-3")
    assert to_si("6e28", "m^-3") == 6e28


@given(st.decimals(min_value="-1e6", max_value="1e6", places=6, allow_nan=False),
       st.sampled_from(["T", "mT", "uT", "s", "us", "ns", "m", "nm", "rad", "m^-3"]))
def test_round_trip_is_exact(value, unit):
    si = to_si(str(value), unit)
    assert from_si(si, unit) == float(value)


def test_parse_quantity_checks_dimension():
    assert parse_quantity("30 us", "time") == 30e-6
    assert parse_quantity(5e-9, "length") == 5e-9
    assert parse_quantity("2.5", "time") == 2.5
    with pytest.raises(DomainError):
        parse_quantity("30 us", "field")
    with pytest.raises(DomainError):
        parse_quantity("thirty", "time")
    with pytest.raises(DomainError):
        parse_quantity("3 furlongs", "length")


def test_parse_angle_forms():
    assert parse_angle("3pi/2") == pytest.approx(3 * math.pi / 2)
    assert parse_angle("pi") == pytest.approx(math.pi)
    assert parse_angle("pi/4") == pytest.approx(math.pi / 4)
    assert parse_angle("45 deg") == pytest.approx(math.pi / 4)
    assert parse_angle(0) == 0.0
    assert parse_angle("0.5") == 0.5


def test_parse_sweep():
    assert parse_sweep("60us:63us:51") == (60e-6, 63e-6, 51)
    with pytest.raises(DomainError):
        parse_sweep("60us:63us")
    with pytest.raises(DomainError):
        parse_sweep("60us:63us:many")
