"""Accumulated NV phases, by quadrature (canonical) and by closed forms.

Every phase is ``|gamma_e|`` times a signed integral of a stage field over a
window.  Two window conventions are supported:

``clock="global"`` (default)
    The integration limits are the protocol's global times
    (phi2 over [2 tau, 2 tau + t_p], phi3 over [2 tau + t_p, ...], ...)
    applied to the stage-local field formulas.  The closed-form phases and
    the ensemble formula are built on this convention.
``clock="local"``
    Each stage field is integrated over its own local interval, which is
    what a continuous-time simulation of the sequence produces.  At
    resonance it equals the global convention with ``2 t_p -> t_p`` in the
    correlation phase.

Phases are linear in the initial magnetization, so :func:`phase_coefficients`
returns a 4x3 matrix ``C`` with ``phases = C @ M0`` for any orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BASIS_ANGLES
from .errors import DomainError, SingularDenominatorError, UnsupportedModeError
from .fields import field_stage1, field_stage2, field_stage3
from .rotations import effective_axis

CLOCKS = ("global", "local")

#: tolerance of phase_quadrature relative to B_max |gamma_e| * duration
QUADRATURE_RTOL = 1e-10

#: |omega - Omega| below this fraction of omega counts as singular
SINGULAR_RTOL = 1e-6


@dataclass(frozen=True)
class PhaseSet:
    phi1: float
    phi2: float
    phi3: float
    phi4: float

    def as_array(self):
        return np.array([self.phi1, self.phi2, self.phi3, self.phi4])

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class TogglingPattern:
    """Consecutive ``(duration, sign)`` segments starting at ``start``.

    ``start`` is expressed in the time variable of the field being
    integrated.
    """

    segments: tuple
    start: float = 0.0

    def __post_init__(self):
        if not self.segments:
            raise DomainError("toggling pattern is empty")
        for duration, sign in self.segments:
            if not duration >= 0 or not math.isfinite(duration):
                raise DomainError(f"segment duration must be >= 0, got {duration!r}")
            if sign not in (1, -1):
                raise DomainError(f"segment sign must be +1 or -1, got {sign!r}")

    @property
    def duration(self):
        return sum(d for d, _ in self.segments)

    def intervals(self):
        t = self.start
        for duration, sign in self.segments:
            yield t, t + duration, sign
            t += duration

    @classmethod
    def single(cls, duration, start=0.0):
        return cls(((duration, 1),), start)

    @classmethod
    def echo(cls, tau, start=0.0):
        """Two-segment echo, ``+`` over [0, tau) then ``-`` over [tau, 2 tau)."""
        return cls(((tau, 1), (tau, -1)), start)

    @classmethod
    def xy8(cls, repetitions, interpulse, start=0.0):
        """Sign pattern of XY8-N with ``8 N`` pi pulses spaced ``interpulse``.

        Half spacings sit at both ends; the block lasts ``8 N interpulse``.
        """
        if repetitions < 1:
            raise DomainError("XY8 needs at least one repetition")
        n_pulses = 8 * repetitions
        segments = [(interpulse / 2, 1)]
        sign = 1
        for _ in range(n_pulses - 1):
            sign = -sign
            segments.append((interpulse, sign))
        segments.append((interpulse / 2, -sign))
        return cls(tuple(segments), start)


def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_sums(field, a, b, x, w):
    """Gauss-Legendre estimate on each panel [a_i, b_i]."""
    half = (b - a) / 2
    mid = (a + b) / 2
    nodes = mid[:, None] + half[:, None] * x[None, :]
    values = np.asarray(field(nodes.ravel())).reshape(nodes.shape)
    return half * (values @ w)


def _integrate(field, a, b, tol, order, max_panel_phase):
    if b <= a:
        return 0.0
    x, w = _gauss_legendre(order)
    n0 = max(1, math.ceil((b - a) * field.max_rate / max_panel_phase))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    total = 0.0
    for _ in range(40):
        whole = _panel_sums(field, lo, hi, x, w)
        mid = (lo + hi) / 2
        halves = _panel_sums(field, lo, mid, x, w) + _panel_sums(field, mid, hi, x, w)
        ok = np.abs(whole - halves) <= tol * (hi - lo) / (b - a)
        total += float(np.sum(halves[ok]))
        if ok.all():
            return total
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    raise DomainError("adaptive quadrature did not converge")


def phase_quadrature(field, pattern, gamma_e_abs, order=16, max_panel_phase=2.0):
    """``|gamma_e| * sum(sign * integral of b)`` over the pattern's segments.

    Panels initially span at most ``max_panel_phase`` radians of the fastest
    oscillation in the field and are bisected until the Gauss-Legendre
    estimate agrees with its two-halves refinement.  The absolute error is
    below ``1e-10 * B_max * |gamma_e| * duration``.
    """
    if not pattern.segments:
        raise DomainError("toggling pattern is empty")
    duration = pattern.duration
    if duration == 0.0 or field.b_max == 0.0:
        return 0.0
    # tighter than the declared bound, which leaves room for round-off
    tol = 1e-2 * QUADRATURE_RTOL * abs(field.b_max) * duration
    total = 0.0
    for a, b, sign in pattern.intervals():
        total += sign * _integrate(field, a, b, tol * (b - a) / duration,
                                   order, max_panel_phase)
    return gamma_e_abs * total


def phase_windows(timing, clock="global"):
    """Toggling patterns for (phi1, phi2, phi3, phi4) under a clock convention."""
    tau, t_p, tau_c = timing.tau, timing.t_p, timing.tau_corr
    if clock == "global":
        starts = (0.0, 2 * tau, 2 * tau + t_p, 2 * tau + t_p + tau_c)
    elif clock == "local":
        starts = (0.0, 0.0, 0.0, tau_c)
    else:
        raise DomainError(f"unknown clock {clock!r}; expected one of {CLOCKS}")
    return (TogglingPattern.echo(tau, starts[0]),
            TogglingPattern.single(t_p, starts[1]),
            TogglingPattern.single(tau_c, starts[2]),
            TogglingPattern.echo(tau, starts[3]))


def stage_fields(angles, protocol):
    p = protocol
    f1 = field_stage1(angles, p.omega, p.b_max)
    f2 = field_stage2(angles, p.omega, p.drive, p.timing, p.b_max)
    f3 = field_stage3(angles, p.omega, p.drive, p.timing, p.b_max)
    return f1, f2, f3, f3


def phases_quadrature(angles, protocol, clock="global", order=16):
    """All four phases by quadrature of the composition-form fields."""
    fields = stage_fields(angles, protocol)
    windows = phase_windows(protocol.timing, clock)
    return PhaseSet(*(phase_quadrature(f, w, protocol.gamma_e_abs, order)
                      for f, w in zip(fields, windows)))


def phase_coefficients(protocol, clock="global", order=16):
    """Matrix ``C`` (4x3) such that ``(phi1..phi4) = C @ M0``."""
    columns = [phases_quadrature(a, protocol, clock, order).as_array()
               for a in BASIS_ANGLES]
    return np.column_stack(columns)


# -- closed forms ------------------------------------------------------------

def _axis_phase(drive):
    """In-plane nutation azimuth, with the misalignment substitution applied."""
    if drive.rabi == 0.0:
        return drive.phi_rf
    return effective_axis(drive).phi_eff


def _unpack(angles, protocol):
    p = protocol
    return (angles.alpha, angles.beta, p.omega, p.drive.rabi, _axis_phase(p.drive),
            p.timing.tau, p.timing.t_p, p.timing.tau_corr, p.b_max, p.gamma_e_abs)


def _check_denominators(omega, rabi):
    if abs(omega - rabi) < SINGULAR_RTOL * omega or abs(omega + rabi) < SINGULAR_RTOL * omega:
        raise SingularDenominatorError(
            "omega is too close to +/-Omega for the closed-form phi2; "
            "use phase_quadrature instead")


def phi1_analytic(angles, protocol):
    a, b, w, W, p, tau, tp, tc, B, g = _unpack(angles, protocol)
    return 4 * B * g / w * math.sin(w * tau / 2) ** 2 * math.sin(a) * math.sin(w * tau + b)


def phi2_analytic(angles, protocol, gamma_placement="cos_term_only"):
    """General RF-stage phase.

    ``gamma_placement="cos_term_only"`` reproduces the reference expression,
    where only the cos(alpha) term carries ``|gamma_e|``; ``"uniform"``
    multiplies the whole bracket by it, consistent with the other phases and
    with quadrature.
    """
    a, b, w, W, p, tau, tp, tc, B, g = _unpack(angles, protocol)
    _check_denominators(w, W)
    wm, wp = w - W, w + W
    sin_part = (
        2 * math.cos(b - 2 * p - tp * w / 2) * math.sin(a) * math.sin(tp * w / 2) / w
        + 2 * math.cos(b + tp * w / 2 + 4 * tau * w) * math.sin(a) * math.sin(tp * w / 2) / w
        + math.sin(a) * math.sin(b - p + 2 * tau * w) / wm
        * (math.cos(p + (tp + 2 * tau) * wm) - math.cos(p + 2 * tau * w - 2 * tau * W))
        + math.sin(a) * math.sin(b - p + 2 * tau * w) / wp
        * (-math.cos(p + 2 * tau * wp) + math.cos(p + (tp + 2 * tau) * wp)))
    cos_part = math.cos(a) / (wm * wp) * (
        wp * math.sin(p + (tp + 2 * tau) * wm)
        - wp * math.sin(p + 2 * tau * w - 2 * tau * W)
        + wm * (math.sin(p + 2 * tau * wp) - math.sin(p + (tp + 2 * tau) * wp)))
    return _place_gamma(B, g, sin_part, cos_part, gamma_placement)


def _place_gamma(B, g, sin_part, cos_part, gamma_placement):
    if gamma_placement == "cos_term_only":
        return 0.5 * B * (sin_part + g * cos_part)
    if gamma_placement == "uniform":
        return 0.5 * B * g * (sin_part + cos_part)
    raise DomainError(f"gamma_placement must be 'cos_term_only' or 'uniform', got {gamma_placement!r}")


def phi3_analytic(angles, protocol):
    a, b, w, W, p, tau, tp, tc, B, g = _unpack(angles, protocol)
    return B * g / w * (
        math.cos(tp * W / 2) ** 2 * math.sin(a)
        * (-math.sin(b + 2 * tp * w + 4 * tau * w) + math.sin(b + (2 * tp + 4 * tau + tc) * w))
        + 2 * math.cos(b - 2 * p - (4 * tp + tc) * w / 2) * math.sin(a)
        * math.sin(tc * w / 2) * math.sin(tp * W / 2) ** 2
        + math.cos(a) * (math.cos(p + 2 * (tp + tau) * w)
                         - math.cos(p + (2 * (tp + tau) + tc) * w)) * math.sin(tp * W))


def phi4_analytic(angles, protocol):
    a, b, w, W, p, tau, tp, tc, B, g = _unpack(angles, protocol)
    return B * g / w * (
        -math.cos(tp * W / 2) ** 2 * math.sin(a) * (
            math.sin(b + (2 * tp + 4 * tau + tc) * w)
            - 2 * math.sin(b + (2 * tp + 5 * tau + tc) * w)
            + math.sin(b + (2 * tp + 6 * tau + tc) * w))
        + math.sin(a) * math.sin(tp * W / 2) ** 2 * (
            math.sin(b - 2 * p - (2 * tp + tc) * w)
            - 2 * math.sin(b - 2 * p - (2 * tp + tau + tc) * w)
            + math.sin(b - 2 * p - (2 * (tp + tau) + tc) * w))
        + math.cos(a) * math.sin(tp * W) * (
            -2 * math.cos(p + (2 * tp + 3 * tau + tc) * w)
            + math.cos(p + (2 * tp + 4 * tau + tc) * w)
            + math.cos(p + (2 * (tp + tau) + tc) * w)))


def phases_analytic(angles, protocol, gamma_placement="cos_term_only"):
    return PhaseSet(phi1_analytic(angles, protocol),
                    phi2_analytic(angles, protocol, gamma_placement),
                    phi3_analytic(angles, protocol),
                    phi4_analytic(angles, protocol))


def phases_resonant(angles, protocol, gamma_placement="cos_term_only"):
    """Simplified phases valid for ``omega * tau = pi`` and a resonant drive."""
    if not protocol.is_resonant:
        raise UnsupportedModeError(
            "resonant phases need omega * tau = pi and omega_rf = omega")
    a, b, w, W, p, tau, tp, tc, B, g = _unpack(angles, protocol)
    sa, ca = math.sin(a), math.cos(a)
    c2, s2 = math.cos(tp * W / 2) ** 2, math.sin(tp * W / 2) ** 2

    phi1 = -4 * B * g / w * sa * math.sin(b)

    _check_denominators(w, W)
    wm, wp = w - W, w + W
    T = tp + 2 * math.pi / w
    sin_part = (
        (math.cos(p + T * wm) - math.cos(p - 2 * math.pi * W / w)) * sa * math.sin(b - p) / wm
        + (-math.cos(p + 2 * math.pi * W / w) + math.cos(p + T * wp)) * sa * math.sin(b - p) / wp
        + 2 * math.cos(b - 2 * p - tp * w / 2) * sa * math.sin(tp * w / 2) / w
        + 2 * math.cos(b + tp * w / 2) * sa * math.sin(tp * w / 2) / w)
    cos_part = ca / (wm * wp) * (
        wp * math.sin(p + T * wm) - wp * math.sin(p - 2 * math.pi * W / w)
        + wm * (math.sin(p + 2 * math.pi * W / w) - math.sin(p + T * wp)))
    phi2 = _place_gamma(B, g, sin_part, cos_part, gamma_placement)

    phi3 = 2 * B * g / w * math.sin(tc * w / 2) * (
        math.cos(b + 2 * tp * w + tc * w / 2) * c2 * sa
        + math.cos(b - 2 * p - (4 * tp + tc) * w / 2) * sa * s2
        + ca * math.sin(p + 2 * tp * w + tc * w / 2) * math.sin(tp * W))

    phi4 = 4 * B * g / w * (
        -c2 * sa * math.sin(b + 2 * tp * w + tc * w)
        + sa * s2 * math.sin(b - 2 * p - (2 * tp + tc) * w)
        + ca * math.cos(p + 2 * tp * w + tc * w) * math.sin(tp * W))
    return PhaseSet(phi1, phi2, phi3, phi4)
