"""Single-NV readout and the orientation-averaged correlation signal.

The ensemble average runs over the polar and azimuthal angles of the
initial magnetization with a *uniform* measure ``d(alpha) d(beta) / (4 pi)``
and no ``sin(alpha)`` Jacobian.  This is deliberate: the reference closed
form for the averaged signal is only recovered under that measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedModeError
from .phases import QUADRATURE_RTOL, PhaseSet, phase_coefficients
from .rotations import effective_axis

ENSEMBLE_NORM = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class ReadoutSignal:
    value: float
    method: str

    @property
    def flagged(self):
        """True when a small-angle value left the physical range [-1, 1]."""
        return abs(self.value) > 1.0


@dataclass(frozen=True)
class EnsembleSignal:
    value: float
    prefactor: float
    method: str
    error: float = 0.0
    warnings: tuple = field(default=())

    @property
    def normalized(self):
        return self.value / self.prefactor


def sigma_z_values(p1, p2, p3, p4):
    """Vectorized exact readout ``cos p1 cos p4 sin(p3 + p2) - sin p1 sin p4``."""
    return np.cos(p1) * np.cos(p4) * np.sin(p3 + p2) - np.sin(p1) * np.sin(p4)


def sigma_z_small_values(p1, p2, p3, p4):
    return p3 + p2 - p1 * p4


def sigma_z_exact(phases):
    return ReadoutSignal(float(sigma_z_values(*phases.as_array())), "exact")


def sigma_z_small_angle(phases):
    return ReadoutSignal(float(sigma_z_small_values(*phases.as_array())), "small-angle")


_READOUTS = {"small-angle": sigma_z_small_values, "exact": sigma_z_values}


def ensemble_grid(n_alpha, n_beta):
    """Product rule: Gauss-Legendre in alpha, periodic trapezoid in beta.

    Weights include the ``1 / (4 pi)`` normalization.
    """
    if n_alpha < 2 or n_beta < 3:
        raise DomainError("ensemble grid needs n_alpha >= 2 and n_beta >= 3")
    x, w = np.polynomial.legendre.leggauss(n_alpha)
    alpha = (x + 1) * math.pi / 2
    w_alpha = w * math.pi / 2
    beta = np.arange(n_beta) * (2 * math.pi / n_beta)
    w_beta = 2 * math.pi / n_beta
    A, B = np.meshgrid(alpha, beta, indexing="ij")
    W = ENSEMBLE_NORM * w_alpha[:, None] * w_beta * np.ones_like(B)
    return A.ravel(), B.ravel(), W.ravel()


def orientations(alpha, beta):
    sa = np.sin(alpha)
    return np.column_stack([sa * np.cos(beta), sa * np.sin(beta), np.cos(alpha)])


def _grid_average(coeffs, n_alpha, n_beta, readout):
    alpha, beta, weights = ensemble_grid(n_alpha, n_beta)
    phases = orientations(alpha, beta) @ coeffs.T
    values = _READOUTS[readout](*phases.T)
    return float(np.sum(values * weights))


def ensemble_average_quadrature(protocol, resolution=(32, 32), clock="global",
                                readout="small-angle", order=16):
    """Orientation average by quadrature of phases and a product grid.

    Phases come from :func:`nvcorr.phases.phase_coefficients` (numerical
    integration of the stage fields); the error estimate is the change from
    halving both grid resolutions plus the declared phase-quadrature error.
    """
    if readout not in _READOUTS:
        raise DomainError(f"readout must be one of {sorted(_READOUTS)}")
    n_alpha, n_beta = resolution
    coeffs = phase_coefficients(protocol, clock, order)
    value = _grid_average(coeffs, n_alpha, n_beta, readout)
    coarse = _grid_average(coeffs, max(2, n_alpha // 2), max(3, n_beta // 2), readout)
    # phases carry a relative error of at most QUADRATURE_RTOL each
    scale = float(np.abs(coeffs).sum(axis=1).max())
    error = abs(value - coarse) + 4 * QUADRATURE_RTOL * scale ** 2
    return EnsembleSignal(value, protocol.prefactor, "quadrature", float(error))


def ensemble_average_montecarlo(protocol, samples=20000, seed=0, clock="global",
                                readout="small-angle", order=16):
    """Seeded Monte-Carlo cross-check over uniform (alpha, beta)."""
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, math.pi, samples)
    beta = rng.uniform(0.0, 2 * math.pi, samples)
    coeffs = phase_coefficients(protocol, clock, order)
    values = _READOUTS[readout](*(orientations(alpha, beta) @ coeffs.T).T)
    # (1 / 4 pi) * area 2 pi^2 = pi / 2
    scale = math.pi / 2
    mean = scale * float(np.mean(values))
    stderr = scale * float(np.std(values, ddof=1)) / math.sqrt(samples)
    return EnsembleSignal(mean, protocol.prefactor, "monte-carlo", stderr)


def correlation_phase(protocol, clock="global"):
    """Larmor phase ``X`` accumulated between the blocks in the closed form."""
    t = protocol.timing
    if clock == "global":
        return protocol.omega * (2 * t.t_p + t.tau_corr)
    if clock == "local":
        return protocol.omega * (t.t_p + t.tau_corr)
    raise DomainError(f"unknown clock {clock!r}")


def closed_form_value(prefactor, theta, phi_rf, x):
    """``K [sin^2(theta/2) cos(2 phi + X) - cos^2(theta/2) cos X]``; broadcasts."""
    return prefactor * (np.sin(theta / 2) ** 2 * np.cos(2 * phi_rf + x)
                        - np.cos(theta / 2) ** 2 * np.cos(x))


def _require_resonant(protocol):
    if not protocol.is_resonant:
        raise UnsupportedModeError(
            "the closed-form ensemble signal needs omega * tau = pi and a resonant drive")


def ensemble_average_closed(protocol, clock="global"):
    """Closed-form ensemble signal for an aligned, resonant drive.

    ``clock="local"`` evaluates the same expression with the correlation
    phase of the stage-local convention (see :mod:`nvcorr.phases`).
    """
    _require_resonant(protocol)
    drive = protocol.drive
    if drive.omega_y != 0.0:
        raise UnsupportedModeError("misaligned drive: use misalignment_map")
    theta = drive.omega_x * protocol.timing.t_p
    value = closed_form_value(protocol.prefactor, theta, drive.phi_rf,
                              correlation_phase(protocol, clock))
    return EnsembleSignal(float(value), protocol.prefactor, "closed-form")


def misalignment_map(protocol, clock="global"):
    """Closed form with ``phi_rf -> phi_rf - atan2(Oy, Ox)``, ``Omega -> |O|``."""
    _require_resonant(protocol)
    axis = effective_axis(protocol.drive)
    theta = protocol.drive.rabi * protocol.timing.t_p
    value = closed_form_value(protocol.prefactor, theta, axis.phi_eff,
                              correlation_phase(protocol, clock))
    return EnsembleSignal(float(value), protocol.prefactor, "closed-form")


# -- printed special cases ---------------------------------------------------

def printed_special_case(phi_rf, prefactor, theta, x):
    """Special-case displays exactly as displayed in the reference, for diffing.

    phi_rf = 0 gives ``+K cos(theta) cos X``; pi/2 gives ``+K cos X``;
    pi/4 gives ``K [cos^2(theta) cos X - sin^2(theta) sin X]``.
    """
    if math.isclose(phi_rf, 0.0, abs_tol=1e-12):
        return prefactor * math.cos(theta) * math.cos(x)
    if math.isclose(phi_rf, math.pi / 2, abs_tol=1e-12):
        return prefactor * math.cos(x)
    if math.isclose(phi_rf, math.pi / 4, abs_tol=1e-12):
        return prefactor * (math.cos(theta) ** 2 * math.cos(x)
                            - math.sin(theta) ** 2 * math.sin(x))
    raise DomainError("special cases exist for phi_rf in {0, pi/4, pi/2}; "
                      "use ensemble_average_closed")


@dataclass(frozen=True)
class SpecialCase:
    phi_rf: float
    signal: EnsembleSignal
    printed: float

    @property
    def difference(self):
        return self.printed - self.signal.value


def special_case(phi_rf, protocol):
    """Closed form at phi_rf in {0, pi/4, pi/2} next to the reference display."""
    if not any(math.isclose(phi_rf, v, abs_tol=1e-12) for v in (0.0, math.pi / 4, math.pi / 2)):
        raise DomainError("special cases exist for phi_rf in {0, pi/4, pi/2}; "
                          "use ensemble_average_closed")
    p = protocol.replace(drive=protocol.drive.__class__(
        protocol.drive.omega_x, protocol.drive.omega_y, phi_rf, protocol.drive.omega_rf))
    signal = ensemble_average_closed(p)
    theta = p.drive.omega_x * p.timing.t_p
    printed = printed_special_case(phi_rf, p.prefactor, theta, correlation_phase(p))
    return SpecialCase(phi_rf, signal, printed)


def phases_from_coefficients(coeffs, m0):
    return PhaseSet.from_array(coeffs @ np.asarray(m0, dtype=float))
