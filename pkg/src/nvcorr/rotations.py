"""Exact SO(3) propagation of the ensemble magnetization.

Matrices reproduce the explicit forms used for the Larmor precession and the
resonant RF nutation entry by entry:

=====================  ====================================================
entry                  ``rotation_k(phi, theta)``
=====================  ====================================================
(1,1)                  cos t - (cos t - 1) cos^2 phi
(1,2), (2,1)           -(cos t - 1) cos phi sin phi
(1,3)                  sin t sin phi
(2,2)                  cos t - (cos t - 1) sin^2 phi
(2,3)                  -cos phi sin t
(3,1)                  -sin t sin phi
(3,2)                  cos phi sin t
(3,3)                  1 - 2 sin^2(t/2)
=====================  ====================================================

which is the right-handed rotation by ``theta`` about
``k = (cos phi, sin phi, 0)``.  All functions broadcast over array angles,
returning ``(..., 3, 3)`` stacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Magnetization
from .errors import DomainError, UnsupportedModeError


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite")


def rotation_z(theta):
    """Active rotation about z: row 1 is (cos, -sin, 0)."""
    _check_finite(theta=theta)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(theta.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def rotation_k(phi_rf, theta):
    """Rotation by ``theta`` about the in-plane axis at azimuth ``phi_rf``."""
    _check_finite(phi_rf=phi_rf, theta=theta)
    phi_rf, theta = np.broadcast_arrays(np.asarray(phi_rf, float), np.asarray(theta, float))
    cp, sp = np.cos(phi_rf), np.sin(phi_rf)
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (3, 3))
    out[..., 0, 0] = ct - (-1 + ct) * cp ** 2
    out[..., 0, 1] = -(-1 + ct) * cp * sp
    out[..., 0, 2] = st * sp
    out[..., 1, 0] = -(-1 + ct) * cp * sp
    out[..., 1, 1] = ct - (-1 + ct) * sp ** 2
    out[..., 1, 2] = -cp * st
    out[..., 2, 0] = -st * sp
    out[..., 2, 1] = cp * st
    out[..., 2, 2] = 1 - 2 * np.sin(theta / 2) ** 2
    return out


def rotation_x(theta):
    return rotation_k(0.0, theta)


@dataclass(frozen=True)
class DriveAxis:
    k: np.ndarray
    phi_eff: float


def effective_axis(drive):
    """Nutation axis of a (possibly misaligned) resonant drive.

    ``phi_eff = phi_rf - atan2(omega_y, omega_x)``; the two-argument
    arctangent keeps ``omega_x == 0`` well defined.
    """
    if drive.omega_x == 0.0 and drive.omega_y == 0.0:
        raise DomainError("drive amplitude is zero; the nutation axis is undefined")
    phi_eff = drive.phi_rf - math.atan2(drive.omega_y, drive.omega_x)
    return DriveAxis(np.array([math.cos(phi_eff), math.sin(phi_eff), 0.0]), phi_eff)


def _vec(m):
    if isinstance(m, Magnetization):
        return m.as_array()
    return np.asarray(m, dtype=float)


def propagate_free(m0, omega, t):
    """Larmor precession ``R_z(omega t) M0``."""
    return Magnetization.from_array(rotation_z(omega * t) @ _vec(m0))


def driven_matrix(omega, drive, t):
    """``R_z(omega t) R_k(Omega t)`` for a resonant drive (broadcasts over t)."""
    if not drive.is_resonant(omega):
        raise UnsupportedModeError(
            "off-resonant RF has no closed form; integrate with nvcorr.oracle")
    t = np.asarray(t, dtype=float)
    if drive.rabi == 0.0:
        return rotation_z(omega * t)
    axis = effective_axis(drive)
    return rotation_z(omega * t) @ rotation_k(axis.phi_eff, drive.rabi * t)


def propagate_driven(m0, omega, drive, t):
    """Resonant nutation plus precession: ``R_z(omega t) R_k(Omega t) M0``."""
    return Magnetization.from_array(driven_matrix(omega, drive, t) @ _vec(m0))
