import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvcorr.core import Magnetization, RfDrive
from nvcorr.errors import DomainError, UnsupportedModeError
from nvcorr.rotations import (effective_axis, propagate_driven, propagate_free, rotation_k,
                              rotation_x, rotation_z)

angles = st.floats(-20, 20, allow_nan=False)


def rodrigues(axis, theta):
    k = np.asarray(axis) / np.linalg.norm(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(theta) * K + (1 - math.cos(theta)) * K @ K


def test_rotation_z_basics():
    assert np.allclose(rotation_z(0.0), np.eye(3), atol=0)
    assert np.allclose(rotation_z(math.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    assert rotation_z(0.3)[0, 1] == -math.sin(0.3)


def test_rotation_z_composes(rng):
    a, b = rng.uniform(-10, 10, (2, 100))
    assert np.abs(rotation_z(a) @ rotation_z(b) - rotation_z(a + b)).max() < 1e-12


def test_non_finite_rejected():
    with pytest.raises(DomainError):
        rotation_z(float("inf"))
    with pytest.raises(DomainError):
        rotation_k(float("nan"), 0.1)


def test_rotation_k_about_x():
    t = 0.7
    r = rotation_k(0.0, t)
    assert r[2, 2] == pytest.approx(math.cos(t))
    assert r[1, 2] == pytest.approx(-math.sin(t))


def test_rotation_k_full_turn():
    assert np.abs(rotation_k(0.4, 2 * math.pi) - np.eye(3)).max() < 1e-12


def test_rotation_k_matches_rodrigues(rng):
    phi, theta = rng.uniform(-10, 10, (2, 1000))
    ours = rotation_k(phi, theta)
    ref = np.array([rodrigues([math.cos(p), math.sin(p), 0], t) for p, t in zip(phi, theta)])
    assert np.abs(ours - ref).max() < 1e-12


@given(angles, angles)
def test_axis_is_fixed(phi, theta):
    k = np.array([math.cos(phi), math.sin(phi), 0.0])
    assert np.abs(rotation_k(phi, theta) @ k - k).max() < 1e-12


@given(angles, angles)
def test_orthogonal_unit_determinant(phi, theta):
    for r in (rotation_z(theta), rotation_k(phi, theta)):
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(r) - 1) < 1e-12


@given(angles, angles)
def test_conjugation_identity(phi, theta):
    lhs = rotation_k(phi, theta)
    rhs = rotation_z(phi) @ rotation_x(theta) @ rotation_z(-phi)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_norm_preserved_over_many_rotations(rng):
    m = np.array([0.6, 0.0, 0.8])
    phis, thetas, zs = rng.uniform(-5, 5, (3, 10_000))
    mats = rotation_z(zs) @ rotation_k(phis, thetas)
    for r in mats:
        m = r @ m
    assert abs(1 - np.linalg.norm(m)) <= 1e-12


def test_effective_axis_cases():
    assert effective_axis(RfDrive(1.0, 0.0, 0.3)).phi_eff == pytest.approx(0.3)
    assert effective_axis(RfDrive(1.0, 1.0, math.pi / 4)).phi_eff == pytest.approx(0.0)
    axis = effective_axis(RfDrive(0.0, 2.0, math.pi / 2))
    assert axis.phi_eff == pytest.approx(0.0)
    assert axis.k[2] == 0 and np.linalg.norm(axis.k) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        effective_axis(RfDrive(0.0, 0.0))


def test_propagate_free():
    z = propagate_free(Magnetization(0, 0, 1), 3.0, 1.7)
    assert (z.x, z.y, z.z) == (0.0, 0.0, 1.0)
    y = propagate_free(Magnetization(1, 0, 0), 2.0, math.pi / 4)
    assert y.y == pytest.approx(1.0) and y.x == pytest.approx(0.0, abs=1e-15)


def test_propagate_driven():
    m = propagate_driven(Magnetization(0, 0, 1), 0.0, RfDrive(1.0), math.pi / 2)
    assert m.as_array() == pytest.approx([0, -1, 0], abs=1e-15)
    free = propagate_free(Magnetization(0.6, 0, 0.8), 2.0, 1.3)
    same = propagate_driven(Magnetization(0.6, 0, 0.8), 2.0, RfDrive(0.0), 1.3)
    assert free.as_array() == pytest.approx(same.as_array(), abs=1e-15)


def test_propagate_driven_refuses_off_resonance():
    with pytest.raises(UnsupportedModeError):
        propagate_driven(Magnetization(0, 0, 1), 10.0, RfDrive(1.0, omega_rf=11.0), 1.0)


def test_misalignment_equivalence(rng):
    for _ in range(50):
        ox, oy, phi, t = rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(0, 6), rng.uniform(0, 5)
        m0 = Magnetization(0.0, 0.6, 0.8)
        a = propagate_driven(m0, 2.0, RfDrive(ox, oy, phi), t).as_array()
        aligned = RfDrive(math.hypot(ox, oy), 0.0, phi - math.atan2(oy, ox))
        b = propagate_driven(m0, 2.0, aligned, t).as_array()
        assert np.abs(a - b).max() < 1e-12
