"""Shared domain types, physical constants and the resonance helpers.

Conventions
-----------
* SI units throughout; every frequency is angular (rad/s).
* Phases use ``|gamma_e|`` as the coupling factor.  The sign of ``gamma_e``
  lives only in :class:`PhysicalConstants`.
* The resonance condition of the two-segment echo is ``omega * tau = pi``
  (``tau`` is half an interrogation block, i.e. half a Larmor period).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: relative tolerance used when checking ``omega * tau == pi``
RESONANCE_RTOL = 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    gamma_e: float = -TWO_PI * 28.8e9   # rad/s/T
    gamma_n: float = TWO_PI * 42.58e6   # rad/s/T, proton
    zfs: float = TWO_PI * 2.87e9        # rad/s, zero-field splitting D
    hbar: float = 1.054571817e-34       # J s
    mu0: float = 1.25663706212e-6       # T m / A

    def __post_init__(self):
        if not self.gamma_e < 0:
            raise DomainError("gamma_e must be negative")
        if not self.gamma_n > 0:
            raise DomainError("gamma_n must be positive")

    @property
    def gamma_e_abs(self):
        return abs(self.gamma_e)


DEFAULT_CONSTANTS = PhysicalConstants()


def _finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Magnetization:
    """Unit 3-vector describing the coherent part of the nuclear ensemble."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(norm - 1.0) <= 1e-9:
            raise DomainError(f"magnetization must be a unit vector (norm {norm!r})")

    @classmethod
    def from_array(cls, vec):
        x, y, z = (float(v) for v in vec)
        return cls(x, y, z)

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self):
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class EnsembleAngles:
    """Polar ``alpha`` in [0, pi] and azimuthal ``beta`` in [0, 2 pi)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi:
            raise DomainError(f"alpha must lie in [0, pi], got {self.alpha!r}")
        if not 0.0 <= self.beta < TWO_PI:
            raise DomainError(f"beta must lie in [0, 2 pi), got {self.beta!r}")

    def magnetization(self):
        sa = math.sin(self.alpha)
        return Magnetization(sa * math.cos(self.beta), sa * math.sin(self.beta),
                             math.cos(self.alpha))


#: angles whose magnetizations are x, y and z; phases are linear in M0, so
#: these three evaluations determine a phase for every orientation.
BASIS_ANGLES = (EnsembleAngles(math.pi / 2, 0.0),
                EnsembleAngles(math.pi / 2, math.pi / 2),
                EnsembleAngles(0.0, 0.0))


@dataclass(frozen=True)
class RfDrive:
    """Resonant RF drive in the rotating-frame picture.

    ``omega_x`` and ``omega_y`` are the Rabi rates of the x and y field
    components, ``phi_rf`` the drive phase referred to t = 0.  ``omega_rf``
    of ``None`` locks the drive to the nuclear Larmor frequency.
    """

    omega_x: float
    omega_y: float = 0.0
    phi_rf: float = 0.0
    omega_rf: float | None = None

    def __post_init__(self):
        for name in ("omega_x", "omega_y", "phi_rf"):
            _finite(name, getattr(self, name))
        if self.omega_rf is not None:
            _finite("omega_rf", self.omega_rf)

    @property
    def rabi(self):
        """Effective Rabi rate ``sqrt(omega_x**2 + omega_y**2)``."""
        return math.hypot(self.omega_x, self.omega_y)

    def is_resonant(self, omega):
        if self.omega_rf is None:
            return True
        return abs(self.omega_rf - omega) <= RESONANCE_RTOL * abs(omega)


@dataclass(frozen=True)
class SequenceTiming:
    """Protocol timing: ``tau`` is half an interrogation block.

    The first block spans [0, 2 tau), the RF pulse [t1, t2) with
    ``t1 = 2 tau`` and ``t2 = 2 tau + t_p``, then the correlation time
    ``tau_corr`` and the second block of length 2 tau.
    """

    tau: float
    t_p: float
    tau_corr: float

    def __post_init__(self):
        for name in ("tau", "t_p", "tau_corr"):
            value = getattr(self, name)
            _finite(name, value)
            if value < 0:
                raise DomainError(f"{name} must be non-negative, got {value!r}")

    @property
    def t1(self):
        return 2.0 * self.tau

    @property
    def t2(self):
        return 2.0 * self.tau + self.t_p

    def is_resonant(self, omega):
        return abs(omega * self.tau - math.pi) <= RESONANCE_RTOL * math.pi


@dataclass(frozen=True)
class NvSample:
    b_ext: float                # T
    depth: float = 5e-9         # m
    rho: float = 6e28           # m^-3
    b_max: float = 1e-7         # T, phenomenological coupling amplitude

    def __post_init__(self):
        for name in ("b_ext", "depth", "rho", "b_max"):
            _finite(name, getattr(self, name))


def larmor_frequency(sample, constants=DEFAULT_CONSTANTS):
    """Nuclear Larmor angular frequency ``gamma_n * B_ext``."""
    if not sample.b_ext > 0:
        raise DomainError(f"B_ext must be positive, got {sample.b_ext!r}")
    return constants.gamma_n * sample.b_ext


def resonant_tau(omega):
    """Half-block duration satisfying ``omega * tau = pi``."""
    if not omega > 0 or not math.isfinite(omega):
        raise DomainError(f"omega must be positive, got {omega!r}")
    return math.pi / omega


@dataclass(frozen=True)
class Protocol:
    """Everything the phase and ensemble routines need besides (alpha, beta)."""

    omega: float
    drive: RfDrive
    timing: SequenceTiming
    b_max: float = 1e-7
    gamma_e_abs: float = field(default=DEFAULT_CONSTANTS.gamma_e_abs)

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega!r}")
        if not self.gamma_e_abs > 0:
            raise DomainError("gamma_e_abs must be positive")

    @property
    def prefactor(self):
        """Ensemble prefactor ``K = 2 pi B_max**2 gamma_e**2 / omega**2``."""
        return TWO_PI * (self.b_max * self.gamma_e_abs / self.omega) ** 2

    @property
    def phase_scale(self):
        """Natural phase magnitude ``B_max |gamma_e| / omega``."""
        return self.b_max * self.gamma_e_abs / self.omega

    @property
    def is_resonant(self):
        return self.timing.is_resonant(self.omega) and self.drive.is_resonant(self.omega)

    def replace(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)
