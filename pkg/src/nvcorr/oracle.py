"""Brute-force references: a Bloch-equation integrator without the RWA and
the literal qubit propagator of the measurement sequence.

Nothing in here uses a closed-form phase, field or ensemble expression.

Bloch convention: ``dM/dt = gamma * B(t) x M``.  With a static field along
z this precesses as ``R_z(+omega t)``, the same sense as the rotation
matrices in :mod:`nvcorr.rotations`.  A linearly polarized drive
``B_rf cos(omega_rf t + phase)`` has Rabi rate ``gamma * B_rf / 2`` after the
rotating-wave approximation, so :meth:`BlochProblem.for_drive` uses
``B_rf = 2 * Omega / gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import expm

from .core import TWO_PI, Magnetization
from .errors import DomainError
from .phases import PhaseSet, phase_windows
from .readout import EnsembleSignal, ReadoutSignal, ensemble_grid, orientations

DEFAULT_STEPS_PER_PERIOD = 2000
MIN_STEPS_PER_PERIOD = 1000
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class RfComponent:
    """One linearly polarized RF component ``amplitude cos(omega t + phase)``."""

    axis: str
    amplitude: float     # T
    omega: float         # rad/s
    phase: float = 0.0   # rad

    def __post_init__(self):
        if self.axis not in AXES:
            raise DomainError(f"RF axis must be one of {AXES}, got {self.axis!r}")
        for name in ("amplitude", "omega", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"RF {name} must be finite")


@dataclass(frozen=True)
class BlochProblem:
    """Classical spin in ``B_ext z + sum of RF components``.

    The z component of the RF field is ignored unless ``rf_z_enabled``;
    only then does a ``RfComponent("z", ...)`` act on the spin.
    """

    m0: Magnetization
    b_ext: float
    gamma: float
    t_end: float
    rf: tuple = ()
    step: float | None = None
    rf_z_enabled: bool = False

    def __post_init__(self):
        if not self.b_ext > 0 or not self.gamma > 0:
            raise DomainError("b_ext and gamma must be positive")
        if not self.t_end >= 0:
            raise DomainError("t_end must be non-negative")
        if self.step is not None and not 0 < self.step <= self.max_step:
            raise DomainError(
                f"step {self.step!r} s exceeds the limit of a Larmor period / "
                f"{MIN_STEPS_PER_PERIOD} = {self.max_step!r} s")

    @property
    def omega(self):
        return self.gamma * self.b_ext

    @property
    def period(self):
        return TWO_PI / self.omega

    @property
    def max_step(self):
        return self.period / MIN_STEPS_PER_PERIOD

    @property
    def resolved_step(self):
        return self.step if self.step is not None else self.period / DEFAULT_STEPS_PER_PERIOD

    @classmethod
    def for_drive(cls, m0, omega, drive, t_end, gamma, step=None, phase_offset=0.0):
        """Problem whose RWA limit is ``R_z(omega t) R_k(Omega t) m0``.

        Both drive components share the phase ``phi_rf + phase_offset`` and
        the frequency ``omega_rf`` (the Larmor frequency when locked).
        """
        omega_rf = omega if drive.omega_rf is None else drive.omega_rf
        phase = drive.phi_rf + phase_offset
        rf = tuple(RfComponent(axis, 2.0 * rate / gamma, omega_rf, phase)
                   for axis, rate in (("x", drive.omega_x), ("y", drive.omega_y))
                   if rate != 0.0)
        return cls(m0, omega / gamma, gamma, t_end, rf, step)

    def rf_arrays(self):
        amp, freq, phase = np.zeros(3), np.zeros(3), np.zeros(3)
        for comp in self.rf:
            i = AXES.index(comp.axis)
            if i == 2 and not self.rf_z_enabled:
                continue
            if amp[i] != 0.0:
                raise DomainError(f"duplicate RF component on axis {comp.axis}")
            amp[i], freq[i], phase[i] = comp.amplitude, comp.omega, comp.phase
        return amp, freq, phase


@numba.njit(cache=True)
def _rate(t, m, gamma, b_ext, amp, freq, phase, out):
    bx = amp[0] * math.cos(freq[0] * t + phase[0])
    by = amp[1] * math.cos(freq[1] * t + phase[1])
    bz = b_ext + amp[2] * math.cos(freq[2] * t + phase[2])
    wx, wy, wz = gamma * bx, gamma * by, gamma * bz
    for j in range(m.shape[1]):
        x, y, z = m[0, j], m[1, j], m[2, j]
        out[0, j] = wy * z - wz * y
        out[1, j] = wz * x - wx * z
        out[2, j] = wx * y - wy * x


@numba.njit(cache=True)
def _rk4(m0, t0, h, n, gamma, b_ext, amp, freq, phase):
    """Classical RK4 with ``n`` fixed steps; returns every state."""
    traj = np.empty((n + 1,) + m0.shape)
    traj[0] = m0
    m = m0.copy()
    k1 = np.empty_like(m)
    k2 = np.empty_like(m)
    k3 = np.empty_like(m)
    k4 = np.empty_like(m)
    for i in range(n):
        t = t0 + i * h
        _rate(t, m, gamma, b_ext, amp, freq, phase, k1)
        _rate(t + h / 2, m + (h / 2) * k1, gamma, b_ext, amp, freq, phase, k2)
        _rate(t + h / 2, m + (h / 2) * k2, gamma, b_ext, amp, freq, phase, k3)
        _rate(t + h, m + h * k3, gamma, b_ext, amp, freq, phase, k4)
        m = m + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        traj[i + 1] = m
    return traj


def _run(problem, m0, t0, t1, even=False):
    """Integrate ``m0`` (3,) or (3, k) from t0 to t1 with a step <= the problem's."""
    span = t1 - t0
    n = max(1, math.ceil(span / problem.resolved_step - 1e-9))
    if even and n % 2:
        n += 1
    h = span / n if span > 0 else 0.0
    amp, freq, phase = problem.rf_arrays()
    m0 = np.ascontiguousarray(m0, dtype=float)
    squeeze = m0.ndim == 1
    if squeeze:
        m0 = m0[:, None]
    traj = _rk4(m0, float(t0), h, n, problem.gamma, problem.b_ext, amp, freq, phase)
    times = t0 + h * np.arange(n + 1)
    return times, (traj[:, :, 0] if squeeze else traj)


@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray
    states: np.ndarray        # (n, 3)
    norm_drift: float

    def at_end(self):
        return Magnetization.from_array(self.states[-1] / np.linalg.norm(self.states[-1]))


def integrate_bloch(problem):
    """Fixed-step RK4 trajectory from 0 to ``t_end``."""
    m0 = problem.m0.as_array()
    times, states = _run(problem, m0, 0.0, problem.t_end)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return BlochTrajectory(times, states, drift)


# -- qubit propagator --------------------------------------------------------

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

#: NV |0> in the {|-1>, |0>} qubit basis; the sequence reproduces the
#: single-NV readout formula from this state.
INITIAL_STATE = np.array([0, 1], dtype=complex)


def _exp_sigma(angle, sigma):
    """``exp(-i angle sigma)`` evaluated with a matrix exponential."""
    return expm(-1j * angle * sigma)


@dataclass(frozen=True)
class QubitPropagator:
    """Ordered unitary factors; ``factors[0]`` acts last (leftmost)."""

    factors: tuple = field(default=())

    @classmethod
    def from_phases(cls, phases):
        p1, p2, p3, p4 = phases.as_array()
        q = math.pi / 4
        return cls((
            ("pi/2 x", _exp_sigma(q, SIGMA_X)),
            ("pi y", SIGMA_Y),
            ("phi4", _exp_sigma(p4 / 2, SIGMA_Z)),
            ("pi/2 y", _exp_sigma(q, SIGMA_Y)),
            ("phi2", _exp_sigma(p2 / 2, SIGMA_Z)),
            ("phi3", _exp_sigma(p3 / 2, SIGMA_Z)),
            ("pi/2 x", _exp_sigma(q, SIGMA_X)),
            ("pi y", SIGMA_Y),
            ("phi1", _exp_sigma(p1 / 2, SIGMA_Z)),
            ("pi/2 y", _exp_sigma(q, SIGMA_Y)),
        ))

    @property
    def matrix(self):
        u = IDENTITY
        for _, factor in self.factors:
            u = u @ factor
        return u

    def unitarity_error(self):
        errors = [np.abs(f.conj().T @ f - IDENTITY).max() for _, f in self.factors]
        u = self.matrix
        errors.append(np.abs(u.conj().T @ u - IDENTITY).max())
        return float(max(errors))


def readout_from_propagator(phases):
    """``<sigma_z>`` of the final state, from the explicit operator product."""
    psi = QubitPropagator.from_phases(phases).matrix @ INITIAL_STATE
    value = float(np.real(np.conj(psi) @ SIGMA_Z @ psi))
    return ReadoutSignal(value, "propagator")


def _rz_stack(angle):
    """``exp(-i angle sigma_z)`` for an array of angles, shape (..., 2, 2)."""
    out = np.zeros(np.shape(angle) + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-1j * angle)
    out[..., 1, 1] = np.exp(1j * angle)
    return out


def readout_from_propagator_many(phases):
    """Vectorized propagator readout for an (n, 4) array of phases."""
    phases = np.asarray(phases, dtype=float)
    q = math.pi / 4
    hx = math.cos(q) * IDENTITY - 1j * math.sin(q) * SIGMA_X
    hy = math.cos(q) * IDENTITY - 1j * math.sin(q) * SIGMA_Y
    p1, p2, p3, p4 = (phases[:, i] for i in range(4))
    u = hx @ SIGMA_Y @ _rz_stack(p4 / 2) @ hy @ _rz_stack(p2 / 2) @ _rz_stack(p3 / 2)
    u = u @ hx @ SIGMA_Y @ _rz_stack(p1 / 2) @ hy
    psi = u @ INITIAL_STATE
    return np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2


# -- end-to-end pipeline -----------------------------------------------------

def _simpson(times, values):
    n = len(times) - 1
    if n == 0:
        return np.zeros(values.shape[1:])
    h = (times[-1] - times[0]) / n
    w = np.ones(n + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return h / 3 * np.tensordot(w, values, axes=1)


class _Segments:
    """Bloch run over consecutive breakpoints with an even step count each."""

    def __init__(self, problem, m0, breakpoints):
        self.pieces = {}
        self.m0 = m0
        m = m0
        edges = sorted(set(breakpoints))
        for a, b in zip(edges[:-1], edges[1:]):
            times, states = _run(problem, m, a, b, even=True)
            self.pieces[(a, b)] = (times, states)
            m = states[-1]
        self.edges = edges

    def state_at(self, t):
        if t == self.edges[0]:
            return self.m0
        for (a, b), (times, states) in self.pieces.items():
            if b == t:
                return states[-1]
            if a == t:
                return states[0]
        raise KeyError(t)

    def integral(self, a, b):
        i, j = self.edges.index(a), self.edges.index(b)
        total = 0.0
        for lo, hi in zip(self.edges[i:j], self.edges[i + 1:j + 1]):
            times, states = self.pieces[(lo, hi)]
            total = total + _simpson(times, states[:, 0])
        return total


def _edges(pattern):
    edges = [0.0]
    for a, b, _ in pattern.intervals():
        edges += [a, b]
    return edges


def _window_phase(run, pattern, scale):
    total = 0.0
    for a, b, sign in pattern.intervals():
        total = total + sign * run.integral(a, b)
    return scale * total


def oracle_phase_coefficients(protocol, gamma_n, clock="global", steps_per_period=None):
    """4x3 phase matrix from Bloch trajectories of the three basis vectors.

    Each stage restarts the integrator from the state the previous stage
    handed over, with the RF phase referred to the start of the RF stage,
    and the field is integrated over that stage's window.  The run for a
    stage is extended up to the end of its window when the window starts
    later than the stage does.
    """
    p, timing, drive = protocol, protocol.timing, protocol.drive
    if steps_per_period is not None and steps_per_period < MIN_STEPS_PER_PERIOD:
        raise DomainError(f"steps_per_period must be >= {MIN_STEPS_PER_PERIOD}")
    period = TWO_PI / p.omega
    step = period / (steps_per_period or DEFAULT_STEPS_PER_PERIOD)
    w1, w2, w3, w4 = phase_windows(timing, clock)
    scale = p.gamma_e_abs * p.b_max

    free = BlochProblem(Magnetization(0, 0, 1), p.omega / gamma_n, gamma_n, 0.0, (), step)
    basis = np.eye(3)

    stage1 = _Segments(free, basis, _edges(w1))
    m1 = stage1.state_at(2 * timing.tau)

    driven = free
    if drive.rabi != 0.0:
        driven = BlochProblem.for_drive(Magnetization(0, 0, 1), p.omega, drive, 0.0,
                                        gamma_n, step)
    stage2 = _Segments(driven, m1, [timing.t_p] + _edges(w2))
    m2 = stage2.state_at(timing.t_p)

    stage3 = _Segments(free, m2, _edges(w3) + _edges(w4))
    return np.vstack([_window_phase(stage1, w1, scale), _window_phase(stage2, w2, scale),
                      _window_phase(stage3, w3, scale), _window_phase(stage3, w4, scale)])


def regime_warnings(protocol):
    warnings = []
    ratio = protocol.phase_scale
    if ratio > 1e-2:
        warnings.append(f"B_max |gamma_e| / omega = {ratio:.3g} exceeds 1e-2; "
                        "small-angle comparisons are not valid")
    rwa = protocol.drive.rabi / protocol.omega
    if rwa > 0.05:
        warnings.append(f"Omega / omega = {rwa:.3g}; counter-rotating terms are large")
    return tuple(warnings)


def end_to_end_oracle(protocol, gamma_n, resolution=(32, 32), clock="global",
                      samples=None, seed=0, steps_per_period=None):
    """Ensemble signal from Bloch fields, Simpson phases and the propagator readout.

    Averages over the uniform (alpha, beta) measure on the product grid, or
    with ``samples`` seeded Monte-Carlo draws when given.
    """
    coeffs = oracle_phase_coefficients(protocol, gamma_n, clock, steps_per_period)
    if samples is None:
        alpha, beta, weights = ensemble_grid(*resolution)
        values = readout_from_propagator_many(orientations(alpha, beta) @ coeffs.T)
        value, error = float(np.sum(values * weights)), 0.0
    else:
        rng = np.random.default_rng(seed)
        alpha = rng.uniform(0.0, math.pi, samples)
        beta = rng.uniform(0.0, TWO_PI, samples)
        values = readout_from_propagator_many(orientations(alpha, beta) @ coeffs.T)
        value = math.pi / 2 * float(np.mean(values))
        error = math.pi / 2 * float(np.std(values, ddof=1)) / math.sqrt(samples)
    return EnsembleSignal(value, protocol.prefactor, "oracle", error,
                          regime_warnings(protocol))


def phases_oracle(angles, protocol, gamma_n, clock="global"):
    coeffs = oracle_phase_coefficients(protocol, gamma_n, clock)
    return PhaseSet.from_array(coeffs @ angles.magnetization().as_array())
