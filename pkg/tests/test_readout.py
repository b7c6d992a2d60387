import math

import numpy as np
import pytest

from conftest import LARMOR, make_protocol, random_resonant
from nvcorr.core import RfDrive
from nvcorr.phases import PhaseSet
from nvcorr.errors import DomainError, UnsupportedModeError
from nvcorr.phases import phase_coefficients
from nvcorr.readout import (closed_form_value, correlation_phase, ensemble_average_closed,
                            ensemble_average_montecarlo, ensemble_average_quadrature,
                            ensemble_grid, misalignment_map, orientations,
                            printed_special_case, sigma_z_exact, sigma_z_small_angle,
                            special_case)


def test_readout_simple_values():
    assert sigma_z_exact(PhaseSet(0, 0, 0, 0)).value == 0.0
    assert sigma_z_exact(PhaseSet(0, math.pi / 4, math.pi / 4, 0)).value == pytest.approx(1.0)
    assert sigma_z_exact(PhaseSet(math.pi / 2, 0, 0, math.pi / 2)).value == pytest.approx(-1.0)
    small = sigma_z_small_angle(PhaseSet(0.01, 0.02, 0.03, 0.04))
    assert small.value == pytest.approx(0.05 - 0.0004)
    assert not small.flagged
    assert sigma_z_small_angle(PhaseSet(0, 1, 1, 0)).flagged


def test_exact_readout_bounded(rng):
    for _ in range(1000):
        assert abs(sigma_z_exact(PhaseSet(*rng.uniform(-10, 10, 4))).value) <= 1.0


def test_grid_weights_total_measure():
    _, _, w = ensemble_grid(16, 16)
    assert w.sum() == pytest.approx(math.pi / 2, rel=1e-14)
    with pytest.raises(DomainError):
        ensemble_grid(1, 8)


def test_undriven_examples(rng):
    for _ in range(20):
        p = random_resonant(rng).replace(drive=RfDrive(0.0, 0.0, rng.uniform(0, 6)))
        q = ensemble_average_quadrature(p)
        x = LARMOR * (2 * p.timing.t_p + p.timing.tau_corr)
        assert q.value == pytest.approx(-p.prefactor * math.cos(x), abs=5e-7 * p.prefactor)
        other = p.replace(drive=RfDrive(0.0, 0.0, 0.0))
        assert abs(ensemble_average_quadrature(other).value - q.value) <= 1e-12 * p.prefactor


def test_quadrature_error_estimate_reported():
    q = ensemble_average_quadrature(make_protocol(rabi=2e4, phi_rf=0.3))
    assert 0 < q.error < 5e-7 * q.prefactor
    assert q.normalized == pytest.approx(q.value / q.prefactor)


def test_exact_readout_option():
    p = make_protocol(rabi=2e4, phi_rf=0.3)
    small = ensemble_average_quadrature(p).value
    exact = ensemble_average_quadrature(p, readout="exact").value
    assert small != exact
    with pytest.raises(DomainError):
        ensemble_average_quadrature(p, readout="other")


def test_montecarlo_agrees_with_grid():
    p = make_protocol(rabi=2e4, phi_rf=0.3)
    grid = ensemble_average_quadrature(p)
    mc = ensemble_average_montecarlo(p, samples=200000, seed=3)
    assert abs(mc.value - grid.value) <= 5 * mc.error
    again = ensemble_average_montecarlo(p, samples=200000, seed=3)
    assert again.value == mc.value


def test_phi2_phi3_average_to_zero(rng):
    for _ in range(20):
        p = random_resonant(rng)
        c = phase_coefficients(p)
        alpha, beta, w = ensemble_grid(32, 32)
        ph = orientations(alpha, beta) @ c.T
        assert abs(np.sum(ph[:, 1] * w)) <= 1e-12 * 4 * p.phase_scale
        assert abs(np.sum(ph[:, 2] * w)) <= 1e-12 * 4 * p.phase_scale


def closed_at(theta, phi, x, k=1.0):
    return float(closed_form_value(k, theta, phi, x))


def test_closed_form_inversion_pair():
    assert closed_at(math.pi, 0.0, 0.0) == pytest.approx(1.0)
    assert closed_at(0.0, 0.0, 0.0) == pytest.approx(-1.0)


def test_closed_form_protocol_inversion():
    p = make_protocol(rabi=math.pi / 30e-6, phi_rf=0.0)
    x = correlation_phase(p)
    s = ensemble_average_closed(p)
    assert s.normalized == pytest.approx(math.cos(x), abs=1e-12)
    s0 = ensemble_average_closed(p.replace(drive=RfDrive(0.0)))
    assert s0.normalized == pytest.approx(-math.cos(x), abs=1e-12)


def test_phi_pi_2_is_omega_independent():
    base = ensemble_average_closed(make_protocol(rabi=0.0, phi_rf=math.pi / 2)).value
    for theta in np.linspace(0, 4 * math.pi, 41):
        p = make_protocol(rabi=theta / 30e-6, phi_rf=math.pi / 2)
        assert abs(ensemble_average_closed(p).value - base) <= 1e-9 * p.prefactor


def test_full_cycle_and_periodicity(rng):
    for _ in range(100):
        phi, x, theta = rng.uniform(0, 7), rng.uniform(0, 50), rng.uniform(0, 7)
        assert closed_at(2 * math.pi, phi, x) == pytest.approx(closed_at(0, phi, x), abs=1e-12)
        assert closed_at(theta, phi + math.pi, x) == pytest.approx(closed_at(theta, phi, x),
                                                                   abs=1e-12)


def test_contrast_law_at_phi_zero():
    thetas = [0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi]
    # cosine quadrature of K[sin^2 cos(X) - cos^2 cos X] over X is -cos(theta)
    ratios = [-closed_at(t, 0.0, 0.0) for t in thetas]
    assert np.allclose(ratios, [1, 0, -1, 0, 1], atol=1e-12)


def test_closed_requires_resonant_aligned():
    p = make_protocol(rabi=2e4)
    with pytest.raises(UnsupportedModeError):
        ensemble_average_closed(p.replace(drive=RfDrive(2e4, omega_rf=1.1 * LARMOR)))
    with pytest.raises(UnsupportedModeError):
        ensemble_average_closed(make_protocol(rabi=2e4, omega_y=1e3))


def test_closed_local_clock():
    p = make_protocol(rabi=2e4, phi_rf=0.2)
    assert correlation_phase(p, "local") == pytest.approx(LARMOR * (30e-6 + 60e-6))
    with pytest.raises(DomainError):
        correlation_phase(p, "other")


def test_special_cases():
    p = make_protocol(rabi=2e4)
    theta, x = 2e4 * 30e-6, correlation_phase(p)
    zero = special_case(0.0, p)
    assert zero.signal.value == pytest.approx(-p.prefactor * math.cos(theta) * math.cos(x))
    assert zero.printed == pytest.approx(-zero.signal.value)
    half = special_case(math.pi / 2, p)
    assert half.printed == pytest.approx(-half.signal.value)
    quarter = special_case(math.pi / 4, p)
    assert quarter.printed == pytest.approx(
        -closed_at(2 * theta, math.pi / 4, -x, p.prefactor), rel=1e-12)
    assert quarter.difference == quarter.printed - quarter.signal.value
    with pytest.raises(DomainError):
        special_case(0.3, p)
    with pytest.raises(DomainError):
        printed_special_case(0.3, 1.0, 0.0, 0.0)


def test_phi_pi_4_quadratures():
    # cos(pi/2 + X) = -sin X: the sine quadrature carries sin^2(theta/2)
    for theta in np.linspace(0, 2 * math.pi, 9):
        x = 0.0
        cos_part = closed_at(theta, math.pi / 4, x)
        sin_part = closed_at(theta, math.pi / 4, math.pi / 2)
        assert cos_part == pytest.approx(-math.cos(theta / 2) ** 2, abs=1e-12)
        assert sin_part == pytest.approx(-math.sin(theta / 2) ** 2, abs=1e-12)


def test_misalignment_examples():
    rabi = 2e4
    aligned = make_protocol(rabi=rabi, phi_rf=0.7)
    same = misalignment_map(aligned)
    assert same.value == ensemble_average_closed(aligned).value
    ox = rabi / math.sqrt(2)
    diag = make_protocol(rabi=ox, omega_y=ox, phi_rf=math.pi / 4)
    ref = make_protocol(rabi=rabi, phi_rf=0.0)
    assert misalignment_map(diag).value == pytest.approx(ensemble_average_closed(ref).value,
                                                         abs=1e-12 * ref.prefactor)
    with pytest.raises(DomainError):
        misalignment_map(make_protocol(rabi=0.0, phi_rf=0.1))


def test_misalignment_matches_pipeline(rng):
    for _ in range(20):
        p = random_resonant(rng)
        ratio = rng.uniform(-2, 2)
        d = p.drive
        q = p.replace(drive=RfDrive(d.omega_x, ratio * d.omega_x, d.phi_rf))
        pipe = ensemble_average_quadrature(q).value
        assert abs(pipe - misalignment_map(q).value) <= 5e-7 * q.prefactor


@pytest.mark.parametrize("ratio", [1e-2])
def test_small_angle_guard(ratio):
    """Exact and small-angle readouts agree within 1e-4 K at B_max |gamma_e| / omega = ratio.

    Known to fail at 1e-2 (gap about 2e-4 K, growing as ratio squared).
    """
    worst = 0.0
    for phi_rf, theta in [(0.0, 0.0), (0.3, 1.0), (math.pi / 4, math.pi), (1.2, 2.5)]:
        p = make_protocol(rabi=theta / 30e-6, phi_rf=phi_rf)
        p = p.replace(b_max=ratio * LARMOR / p.gamma_e_abs)
        small = ensemble_average_quadrature(p).value
        exact = ensemble_average_quadrature(p, readout="exact").value
        worst = max(worst, abs(exact - small) / p.prefactor)
    assert worst <= 1e-4, f"max |exact - small-angle| / K = {worst:.3e}"


def test_small_angle_gap_scales_quadratically():
    gaps = []
    for ratio in (4e-3, 2e-3):
        p = make_protocol(rabi=1.0 / 30e-6, phi_rf=0.3)
        p = p.replace(b_max=ratio * LARMOR / p.gamma_e_abs)
        gaps.append(abs(ensemble_average_quadrature(p, readout="exact").value
                        - ensemble_average_quadrature(p).value) / p.prefactor)
    assert 3.0 <= gaps[0] / gaps[1] <= 5.0
    assert gaps[0] <= 1e-4
