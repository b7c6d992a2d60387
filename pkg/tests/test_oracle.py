import math

import numpy as np
import pytest

from conftest import LARMOR, make_protocol
from nvcorr.core import DEFAULT_CONSTANTS, Magnetization, RfDrive
from nvcorr.errors import DomainError
from nvcorr.oracle import (BlochProblem, QubitPropagator, RfComponent, end_to_end_oracle,
                           integrate_bloch, oracle_phase_coefficients, phases_oracle,
                           readout_from_propagator, readout_from_propagator_many,
                           regime_warnings)
from nvcorr.phases import PhaseSet, phase_coefficients, phases_quadrature
from nvcorr.readout import ensemble_average_closed, sigma_z_exact
from nvcorr.rotations import rotation_k, rotation_z

GAMMA_N = DEFAULT_CONSTANTS.gamma_n


def driven(ratio, phi_rf=0.0, omega_y_share=0.0):
    rabi = ratio * LARMOR
    ox = rabi * math.cos(omega_y_share)
    oy = rabi * math.sin(omega_y_share)
    drive = RfDrive(ox, oy, phi_rf)
    return rabi, integrate_bloch(BlochProblem.for_drive(Magnetization(0, 0, 1), LARMOR, drive,
                                                        math.pi / rabi, GAMMA_N))


def rwa_reference(times, phi, rabi):
    return (rotation_z(LARMOR * times) @ rotation_k(phi, rabi * times)) @ np.array([0, 0, 1.0])


def test_free_precession():
    period = 2 * math.pi / LARMOR
    problem = BlochProblem(Magnetization(1, 0, 0), LARMOR / GAMMA_N, GAMMA_N, 100 * period)
    traj = integrate_bloch(problem)
    assert np.abs(traj.states[:, 0] - np.cos(LARMOR * traj.times)).max() <= 1e-9
    assert traj.norm_drift <= 1e-9


def test_resonant_inversion():
    _, traj = driven(0.01)
    assert traj.at_end().z == pytest.approx(-1.0, abs=5 * 0.01)
    assert traj.norm_drift <= 1e-9


def test_misaligned_drive_follows_plus_rule():
    phi = 0.3
    rabi, traj = driven(0.01, phi, math.pi / 4)
    plus = np.abs(traj.states - rwa_reference(traj.times, phi + math.pi / 4, rabi)).max()
    minus = np.abs(traj.states - rwa_reference(traj.times, phi - math.pi / 4, rabi)).max()
    assert plus <= 5 * 0.01
    assert minus > 0.5


def test_rwa_deviation_scaling():
    devs = []
    for ratio in (0.02, 0.01, 0.005):
        rabi, traj = driven(ratio)
        devs.append(np.abs(traj.states - rwa_reference(traj.times, 0.0, rabi)).max() / ratio)
    assert max(devs) <= 5
    assert max(devs) <= 1.5 * min(devs)


def test_step_halving_is_fourth_order():
    period = 2 * math.pi / LARMOR
    ends = []
    for n in (1000, 2000, 4000):
        problem = BlochProblem.for_drive(Magnetization(0.6, 0, 0.8), LARMOR,
                                         RfDrive(0.02 * LARMOR, 0.0, 0.4), 20 * period,
                                         GAMMA_N, step=period / n)
        ends.append(integrate_bloch(problem).states[-1])
    first = np.abs(ends[1] - ends[0]).max()
    second = np.abs(ends[2] - ends[1]).max()
    assert second <= first / 16 * 1.1


def test_step_limit_enforced():
    period = 2 * math.pi / LARMOR
    with pytest.raises(DomainError):
        BlochProblem(Magnetization(1, 0, 0), LARMOR / GAMMA_N, GAMMA_N, 1e-6,
                     step=period / 500)
    with pytest.raises(DomainError):
        RfComponent("w", 1.0, 1.0)


def test_rf_z_component_is_opt_in():
    comp = (RfComponent("z", 1e-3, LARMOR),)
    base = BlochProblem(Magnetization(1, 0, 0), LARMOR / GAMMA_N, GAMMA_N, 1e-6, comp)
    assert not base.rf_arrays()[0].any()
    on = BlochProblem(Magnetization(1, 0, 0), LARMOR / GAMMA_N, GAMMA_N, 1e-6, comp,
                      rf_z_enabled=True)
    assert on.rf_arrays()[0][2] == 1e-3
    a, b = integrate_bloch(base).states[-1], integrate_bloch(on).states[-1]
    assert np.abs(a - b).max() > 1e-6


def test_propagator_matches_exact_readout(rng):
    worst = 0.0
    for _ in range(1000):
        ph = PhaseSet(*rng.uniform(-math.pi, math.pi, 4))
        worst = max(worst, abs(readout_from_propagator(ph).value - sigma_z_exact(ph).value))
        assert QubitPropagator.from_phases(ph).unitarity_error() <= 1e-12
    assert worst <= 1e-12


def test_propagator_examples(rng):
    assert readout_from_propagator(PhaseSet(0, 0, 0, 0)).value == pytest.approx(0, abs=1e-15)
    p = rng.uniform(-1, 1, 4)
    swapped = PhaseSet(p[0], p[2], p[1], p[3])
    assert readout_from_propagator(PhaseSet(*p)).value == pytest.approx(
        readout_from_propagator(swapped).value, abs=1e-14)
    many = readout_from_propagator_many(rng.uniform(-1, 1, (50, 4)))
    assert many.shape == (50,)


def test_propagator_factors_unitary(rng):
    prop = QubitPropagator.from_phases(PhaseSet(*rng.uniform(-3, 3, 4)))
    for _, f in prop.factors:
        assert np.abs(f.conj().T @ f - np.eye(2)).max() <= 1e-12


def test_oracle_phases_match_quadrature():
    p = make_protocol(rabi=math.pi / 30e-6, phi_rf=0.3)
    c_oracle = oracle_phase_coefficients(p, GAMMA_N)
    c_quad = phase_coefficients(p)
    # the RWA error of the nutation is the only difference
    assert np.abs(c_oracle - c_quad).max() <= 5 * p.drive.rabi / LARMOR * 4 * p.phase_scale
    from nvcorr.core import EnsembleAngles
    a = EnsembleAngles(1.0, 2.0)
    assert np.abs(phases_oracle(a, p, GAMMA_N).as_array()
                  - phases_quadrature(a, p).as_array()).max() <= 5e-2 * 4 * p.phase_scale


def test_oracle_steps_per_period_floor():
    with pytest.raises(DomainError):
        oracle_phase_coefficients(make_protocol(), GAMMA_N, steps_per_period=500)


def budget(p):
    return max(5 * p.drive.rabi / p.omega * p.prefactor, 1e-4 * p.prefactor)


def test_end_to_end_grid():
    worst = 0.0
    for theta in (0.0, math.pi / 2, math.pi):
        for tau_corr in (60e-6, 61.3e-6, 62.9e-6):
            for phi in (0.0, math.pi / 4, math.pi / 2):
                p = make_protocol(rabi=theta / 30e-6, phi_rf=phi, tau_corr=tau_corr)
                e = end_to_end_oracle(p, GAMMA_N, resolution=(16, 16))
                gap = abs(e.value - ensemble_average_closed(p).value)
                assert gap <= budget(p), (theta, tau_corr, phi, gap / p.prefactor)
                worst = max(worst, gap / p.prefactor)
    assert worst > 0


def test_end_to_end_undriven_and_pi_2():
    p0 = make_protocol(rabi=0.0, phi_rf=math.pi / 2)
    x = LARMOR * (2 * 30e-6 + 60e-6)
    e0 = end_to_end_oracle(p0, GAMMA_N, resolution=(16, 16))
    assert abs(e0.value + p0.prefactor * math.cos(x)) <= budget(p0)
    for theta in (math.pi / 2, math.pi, 2 * math.pi):
        p = make_protocol(rabi=theta / 30e-6, phi_rf=math.pi / 2)
        e = end_to_end_oracle(p, GAMMA_N, resolution=(16, 16))
        assert abs(e.value - e0.value) <= budget(p)


def test_end_to_end_montecarlo_seeded():
    p = make_protocol(rabi=math.pi / 30e-6, phi_rf=0.0)
    a = end_to_end_oracle(p, GAMMA_N, samples=5000, seed=1)
    b = end_to_end_oracle(p, GAMMA_N, samples=5000, seed=1)
    assert a.value == b.value and a.error > 0
    assert abs(a.value - ensemble_average_closed(p).value) <= 5 * a.error + budget(p)


def test_regime_warnings():
    p = make_protocol(rabi=0.1 * LARMOR)
    assert len(regime_warnings(p)) == 1
    big = p.replace(b_max=0.02 * LARMOR / p.gamma_e_abs)
    assert len(regime_warnings(big)) == 2
    assert regime_warnings(make_protocol()) == ()
