import math

import pytest

from nvcorr.core import (DEFAULT_CONSTANTS, TWO_PI, EnsembleAngles, Magnetization, NvSample,
                         PhysicalConstants, Protocol, RfDrive, SequenceTiming,
                         larmor_frequency, resonant_tau)
from nvcorr.errors import DomainError


def test_default_constants():
    c = DEFAULT_CONSTANTS
    assert c.gamma_e < 0 and c.gamma_n > 0
    assert c.gamma_e_abs / TWO_PI == pytest.approx(28.8e9)
    assert c.gamma_n / TWO_PI == pytest.approx(42.58e6)
    assert c.zfs / TWO_PI == pytest.approx(2.87e9)


def test_constant_signs_enforced():
    with pytest.raises(DomainError):
        PhysicalConstants(gamma_e=1.0)
    with pytest.raises(DomainError):
        PhysicalConstants(gamma_n=-1.0)


def test_larmor_at_experimental_field():
    f = larmor_frequency(NvSample(31.2e-3)) / TWO_PI
    assert f == pytest.approx(1.328496e6, rel=1e-6)
    assert round(f / 1e6, 2) == 1.33


def test_larmor_scales_with_field():
    assert larmor_frequency(NvSample(1.0)) / TWO_PI == pytest.approx(42.58e6)


def test_larmor_rejects_zero_field():
    with pytest.raises(DomainError):
        larmor_frequency(NvSample(0.0))


def test_resonant_tau():
    assert resonant_tau(TWO_PI * 1.329e6) == pytest.approx(376.2e-9, rel=1e-4)
    assert resonant_tau(math.pi) == 1.0
    with pytest.raises(DomainError):
        resonant_tau(0.0)
    with pytest.raises(DomainError):
        resonant_tau(-1.0)


def test_sample_defaults():
    s = NvSample(31.2e-3)
    assert s.rho == 6e28 and s.depth == 5e-9


def test_magnetization_norm_checked():
    Magnetization(0.6, 0.8, 0.0)
    with pytest.raises(DomainError):
        Magnetization(1.0, 1.0, 0.0)


def test_angles_ranges():
    EnsembleAngles(math.pi, 0.0)
    with pytest.raises(DomainError):
        EnsembleAngles(-0.1, 0.0)
    with pytest.raises(DomainError):
        EnsembleAngles(0.1, TWO_PI)
    m = EnsembleAngles(math.pi / 2, math.pi / 2).magnetization()
    assert m.y == pytest.approx(1.0)


def test_drive_rabi_and_resonance():
    d = RfDrive(3.0, 4.0)
    assert d.rabi == 5.0
    assert d.is_resonant(10.0)
    assert not RfDrive(1.0, omega_rf=11.0).is_resonant(10.0)
    with pytest.raises(DomainError):
        RfDrive(float("nan"))


def test_timing():
    t = SequenceTiming(2.0, 3.0, 4.0)
    assert (t.t1, t.t2) == (4.0, 7.0)
    assert t.t2 >= t.t1
    assert SequenceTiming(math.pi / 5.0, 0, 0).is_resonant(5.0)
    assert not SequenceTiming(0.5 / 5.0, 0, 0).is_resonant(5.0)
    with pytest.raises(DomainError):
        SequenceTiming(1.0, -1.0, 0.0)


def test_protocol_prefactor():
    p = Protocol(2.0, RfDrive(0.0), SequenceTiming(math.pi / 2, 0, 0), b_max=3.0,
                 gamma_e_abs=5.0)
    assert p.prefactor == pytest.approx(TWO_PI * 3.0 ** 2 * 5.0 ** 2 / 2.0 ** 2)
    assert p.phase_scale == 7.5
    assert p.is_resonant
