"""Field sensed by the NV in each protocol stage, plus the dipolar geometry.

The rotation-composition form is the single source of truth for the stage
fields.  The expanded trigonometric forms (``*_expanded``) exist so
that tests and the validation suite can diff them against it.

Stage time is local: every :class:`StageField` takes the variable that
appears in its formula, with t = 0 at the start of the stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EnsembleAngles, Magnetization
from .errors import DomainError, UnsupportedModeError
from .rotations import effective_axis, rotation_k, rotation_z


@dataclass(frozen=True, eq=False)
class StageField:
    """``b(t) = B_max [R_z(omega t) R_k(Omega t) m_start] . x`` in tesla.

    ``rabi`` is zero outside the RF stage, in which case the nutation factor
    is the identity.
    """

    stage: int
    b_max: float
    omega: float
    m_start: np.ndarray
    rabi: float = 0.0
    phi_eff: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        rot = rotation_z(self.omega * t)
        if self.rabi != 0.0:
            rot = rot @ rotation_k(self.phi_eff, self.rabi * t)
        return self.b_max * (rot[..., 0, :] @ self.m_start)

    @property
    def max_rate(self):
        """Highest angular frequency present in b(t)."""
        return abs(self.omega) + abs(self.rabi)

    def magnetization(self, t):
        rot = rotation_z(self.omega * t)
        if self.rabi != 0.0:
            rot = rot @ rotation_k(self.phi_eff, self.rabi * t)
        return Magnetization.from_array(rot @ self.m_start)


def _m0(angles):
    if isinstance(angles, Magnetization):
        return angles.as_array()
    return angles.magnetization().as_array()


def _stage_m1(angles, omega, timing):
    return rotation_z(2.0 * omega * timing.tau) @ _m0(angles)


def _require_resonant(drive, omega):
    if not drive.is_resonant(omega):
        raise UnsupportedModeError(
            "stage fields need a resonant drive; use nvcorr.oracle for off-resonant RF")


def field_stage1(angles, omega, b_max):
    """First interrogation block: ``B_max sin(alpha) cos(omega t + beta)``."""
    return StageField(1, b_max, omega, _m0(angles))


def field_stage2(angles, omega, drive, timing, b_max):
    """RF stage, starting from ``M1 = R_z(2 omega tau) M0``."""
    _require_resonant(drive, omega)
    m1 = _stage_m1(angles, omega, timing)
    if drive.rabi == 0.0:
        return StageField(2, b_max, omega, m1)
    axis = effective_axis(drive)
    return StageField(2, b_max, omega, m1, rabi=drive.rabi, phi_eff=axis.phi_eff)


def field_stage3(angles, omega, drive, timing, b_max):
    """Correlation time and second block, from ``M2 = R_z(w t_p) R_k(W t_p) M1``."""
    _require_resonant(drive, omega)
    m1 = _stage_m1(angles, omega, timing)
    rot = rotation_z(omega * timing.t_p)
    if drive.rabi != 0.0:
        axis = effective_axis(drive)
        rot = rot @ rotation_k(axis.phi_eff, drive.rabi * timing.t_p)
    return StageField(3, b_max, omega, rot @ m1)


# -- expanded forms, aligned drive (omega_y = 0) --------------------

def b1_expanded(angles, omega, b_max, t):
    return b_max * math.sin(angles.alpha) * np.cos(omega * np.asarray(t) + angles.beta)


def b2_expanded(angles, omega, rabi, phi_rf, tau, b_max, t):
    """Pre-resonance expansion of the RF-stage field."""
    a, b, p = angles.alpha, angles.beta, phi_rf
    t = np.asarray(t, dtype=float)
    w, W = omega, rabi
    return b_max * (
        math.cos(a) * np.sin(p + w * t) * np.sin(W * t)
        + 0.5 * math.sin(a) * (
            np.cos(b - 2 * p - w * t + 2 * tau * w)
            + np.cos(b + w * t + 2 * tau * w)
            - math.sin(b - p + 2 * tau * w)
            * (np.sin(p + w * t - W * t) + np.sin(p + w * t + W * t))))


def b3_expanded(angles, omega, rabi, phi_rf, tau, t_p, b_max, t):
    """Pre-resonance expansion of the post-pulse field."""
    a, b, p = angles.alpha, angles.beta, phi_rf
    t = np.asarray(t, dtype=float)
    w, W = omega, rabi
    return b_max * (
        np.cos(b + (w * t + w * t_p + 2 * w * tau)) * math.cos(W * t_p / 2) ** 2 * math.sin(a)
        + np.cos(b - 2 * p - w * t - w * t_p + 2 * w * tau)
        * math.sin(W * t_p / 2) ** 2 * math.sin(a)
        + math.cos(a) * np.sin(p + w * (t + t_p)) * math.sin(W * t_p))


def b2_expanded_resonant(angles, omega, rabi, phi_rf, b_max, t):
    a, b, p = angles.alpha, angles.beta, phi_rf
    t = np.asarray(t, dtype=float)
    w, W = omega, rabi
    return b_max * (
        np.sin(W * t) * math.cos(a) * np.sin(p + w * t)
        + 0.5 * math.sin(a) * (
            np.cos(b - 2 * p - w * t) + np.cos(w * t + b)
            - math.sin(b - p) * (np.sin(p + w * t - W * t) + np.sin(p + w * t + W * t))))


def b3_expanded_resonant(angles, omega, rabi, phi_rf, t_p, b_max, t):
    """Three-term resonant form (cos^2, sin^2 and sin terms in Omega t_p)."""
    a, b, p = angles.alpha, angles.beta, phi_rf
    t = np.asarray(t, dtype=float)
    w, W = omega, rabi
    return b_max * (
        math.cos(W * t_p / 2) ** 2 * math.sin(a) * np.cos(w * (t + t_p) + b)
        + math.sin(W * t_p / 2) ** 2 * math.sin(a) * np.cos(b - 2 * p - w * (t + t_p))
        + math.sin(W * t_p) * math.cos(a) * np.sin(p + w * (t + t_p)))


# -- detection hemisphere ----------------------------------------------------

@dataclass(frozen=True)
class GeometryIntegral:
    """Hemisphere integrals of (g_x, g_y, f); dimensionless.

    ``error`` is an absolute error estimate shared by the three components
    (order-refinement difference plus a round-off floor).
    """

    i_x: float
    i_y: float
    i_f: float
    error: float
    converged: bool
    order: int


def _hemisphere_rule(depth, order):
    """Product rule on the hemisphere of radius ``depth`` above (0, 0, depth)."""
    x, w = np.polynomial.legendre.leggauss(order)
    rho = depth * (x + 1) / 2
    w_rho = w * depth / 2
    theta = (x + 1) * math.pi / 4
    w_theta = w * math.pi / 4
    n_phi = 2 * order
    phi = np.arange(n_phi) * (2 * math.pi / n_phi)
    w_phi = np.full(n_phi, 2 * math.pi / n_phi)

    R, T, P = np.meshgrid(rho, theta, phi, indexing="ij")
    W = (w_rho[:, None, None] * w_theta[None, :, None] * w_phi[None, None, :]
         * R ** 2 * np.sin(T))
    rx = R * np.sin(T) * np.cos(P)
    ry = R * np.sin(T) * np.sin(P)
    rz = depth + R * np.cos(T)
    return rx, ry, rz, W


def _hemisphere_sums(depth, order):
    rx, ry, rz, W = _hemisphere_rule(depth, order)
    r2 = rx ** 2 + ry ** 2 + rz ** 2
    r = np.sqrt(r2)
    gx = 3 * rz * rx / r ** 5
    gy = 3 * rz * ry / r ** 5
    f = (3 * rz ** 2 / r2 - 1) / r ** 3
    sums = np.array([np.sum(gx * W), np.sum(gy * W), np.sum(f * W)])
    magnitude = np.sum((np.abs(gx) + np.abs(gy) + np.abs(f)) * W)
    return sums, magnitude


def hemisphere_integral(depth, order=24):
    """Integrate the dipolar geometric functions over the detection hemisphere.

    The NV sits at the origin, the surface at height ``depth`` and the
    hemisphere of radius ``depth`` rests on the surface directly above the
    NV, so |r| >= depth everywhere.  The result at ``2 * order`` is returned
    with the difference from ``order`` as the error estimate.
    """
    if not depth > 0:
        raise DomainError(f"depth must be positive, got {depth!r}")
    if order < 2:
        raise DomainError(f"quadrature order must be >= 2, got {order!r}")
    coarse, _ = _hemisphere_sums(depth, order)
    fine, magnitude = _hemisphere_sums(depth, 2 * order)
    floor = 64 * np.finfo(float).eps * magnitude
    error = float(np.max(np.abs(fine - coarse)) + floor)
    converged = bool(error <= 1e-6 * max(abs(fine[2]), floor))
    return GeometryIntegral(float(fine[0]), float(fine[1]), float(fine[2]),
                            error, converged, 2 * order)
