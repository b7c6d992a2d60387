"""Known-frequency sinusoid fits of correlation traces and contrast ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, DomainError

#: largest acceptable condition number of the column-scaled normal matrix
MAX_CONDITION = 1e8


@dataclass(frozen=True)
class Trace:
    """Signal versus correlation time, with run metadata."""

    tau_corr: np.ndarray
    signal: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau_corr, dtype=float)
        sig = np.asarray(self.signal, dtype=float)
        if tau.shape != sig.shape or tau.ndim != 1:
            raise DomainError("tau_corr and signal must be 1-D arrays of equal length")
        if tau.size > 1 and not np.all(np.diff(tau) > 0):
            raise DomainError("tau_corr must be strictly increasing")
        object.__setattr__(self, "tau_corr", tau)
        object.__setattr__(self, "signal", sig)


@dataclass(frozen=True)
class SinusoidFit:
    """``signal = a cos(omega t) + b sin(omega t) + c``."""

    a: float
    b: float
    c: float
    rms_residual: float

    @property
    def amplitude(self):
        return math.hypot(self.a, self.b)

    @property
    def phase(self):
        return math.atan2(-self.b, self.a)

    @property
    def complex_amplitude(self):
        """``A`` with ``signal - c = Re(A exp(i omega t))``."""
        return complex(self.a, -self.b)

    def as_dict(self):
        return {"a": self.a, "b": self.b, "c": self.c, "amplitude": self.amplitude,
                "phase": self.phase, "rms_residual": self.rms_residual}


def fit_sinusoid(trace, omega):
    """Linear least squares on ``{cos, sin, 1}`` at the known frequency.

    Solved through the normal equations after scaling every column to unit
    norm.  A sweep too short to separate the cosine from the offset raises
    :class:`ConditioningError`.
    """
    t, y = trace.tau_corr, trace.signal
    if t.size < 4:
        raise DomainError(f"need at least 4 points to fit, got {t.size}")
    # phases taken relative to the first sample keep the basis well scaled;
    # the coefficients are rotated back to the absolute time origin below
    t0 = t[0]
    x = omega * (t - t0)
    design = np.column_stack([np.cos(x), np.sin(x), np.ones_like(x)])
    norms = np.linalg.norm(design, axis=0)
    scaled = design / norms
    normal = scaled.T @ scaled
    cond = np.linalg.cond(normal)
    if not cond < MAX_CONDITION:
        span = omega * (t[-1] - t[0]) / (2 * math.pi)
        suggested = 0.25 * 2 * math.pi / omega
        raise ConditioningError(
            f"sweep covers {span:.3g} periods (normal-matrix condition {cond:.3g}); "
            f"use a span of at least {suggested:.3g} s (a quarter period)")
    coef = np.linalg.solve(normal, scaled.T @ y) / norms
    residual = y - design @ coef
    rms = float(np.sqrt(np.mean(residual ** 2)))
    a_rel, b_rel, c = coef
    # a cos(x - x0) + b sin(x - x0) expressed in cos(x), sin(x)
    x0 = omega * t0
    a = a_rel * math.cos(x0) - b_rel * math.sin(x0)
    b = a_rel * math.sin(x0) + b_rel * math.cos(x0)
    return SinusoidFit(float(a), float(b), float(c), rms)


@dataclass(frozen=True)
class QuadratureRatio:
    """Complex amplitude relative to the undriven reference.

    ``cos`` is the in-phase part and ``sin`` the quadrature part, signed so
    that a pure sine-like shift of the trace is positive.
    """

    cos: float
    sin: float

    @property
    def magnitude(self):
        return math.hypot(self.cos, self.sin)


def quadrature_ratio(fit, reference):
    ref = reference.complex_amplitude
    if ref == 0:
        raise DomainError("reference trace has zero amplitude")
    r = fit.complex_amplitude / ref
    return QuadratureRatio(r.real, -r.imag)
