"""Reconciliation suite: reference closed forms against canonical numerics.

Every item computes a measured discrepancy and compares it with a
catalogued expectation.  An item passes when the measurement matches the
expectation, so known inconsistencies in the reference formulas are
reported (with their size) rather than asserted away.  The suite passes
iff every item passes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_CONSTANTS, TWO_PI, EnsembleAngles, Magnetization, NvSample,
                   Protocol, RfDrive, SequenceTiming, larmor_frequency, resonant_tau)
from .fields import (b2_expanded, b2_expanded_resonant, b3_expanded, b3_expanded_resonant,
                     field_stage2, field_stage3, hemisphere_integral)
from .oracle import BlochProblem, integrate_bloch
from .phases import (phases_analytic, phases_quadrature, phases_resonant, phi1_analytic,
                     phi2_analytic)
from .readout import (closed_form_value, ensemble_average_closed,
                      ensemble_average_quadrature, printed_special_case,
                      sigma_z_small_values, sigma_z_values)
from .rotations import rotation_k, rotation_z

LARMOR = TWO_PI * 1.33e6
METHODS_INTERPULSE = 188.1e-9


@dataclass
class Item:
    name: str
    expectation: str
    observed: dict = field(default_factory=dict)
    passed: bool = False
    seconds: float = 0.0

    def as_dict(self):
        return {"name": self.name, "expectation": self.expectation,
                "observed": self.observed, "passed": self.passed,
                "seconds": round(self.seconds, 3)}


def random_angles(rng):
    return EnsembleAngles(rng.uniform(0, math.pi), rng.uniform(0, TWO_PI))


def random_protocol(rng, resonant=True, omega=LARMOR, b_max=1e-7):
    """Draw a protocol; off-resonant draws jitter tau around pi / omega."""
    tau = math.pi / omega
    if not resonant:
        tau *= rng.uniform(0.3, 1.7)
    drive = RfDrive(rng.uniform(0, 0.05) * omega, 0.0, rng.uniform(0, TWO_PI))
    timing = SequenceTiming(tau, rng.uniform(0, 40e-6), rng.uniform(0, 70e-6))
    return Protocol(omega, drive, timing, b_max)


def _rel(a, b, scale):
    return abs(a - b) / scale


# -- items -------------------------------------------------------------------

def check_general_phases(rng, draws):
    """phi1, phi3, phi4 closed forms and the uniform-gamma phi2 vs quadrature."""
    worst = np.zeros(4)
    for _ in range(draws):
        angles, p = random_angles(rng), random_protocol(rng, resonant=False)
        q = phases_quadrature(angles, p).as_array()
        a = phases_analytic(angles, p, "uniform").as_array()
        worst = np.maximum(worst, np.abs(a - q) / (p.phase_scale * 4))
    ok = bool(np.all(worst <= 1e-7))
    return {"max_rel_error": dict(zip(("phi1", "phi2", "phi3", "phi4"), worst.tolist())),
            "draws": draws}, ok


def check_resonant_phases(rng, draws):
    worst = np.zeros(4)
    for _ in range(draws):
        angles, p = random_angles(rng), random_protocol(rng)
        q = phases_quadrature(angles, p).as_array()
        a = phases_resonant(angles, p, "uniform").as_array()
        worst = np.maximum(worst, np.abs(a - q) / (p.phase_scale * 4))
    ok = bool(np.all(worst <= 1e-7))
    return {"max_rel_error": dict(zip(("phi1", "phi2", "phi3", "phi4"), worst.tolist())),
            "draws": draws}, ok


def check_phi2_gamma(rng, draws):
    """As printed, the sin(alpha) terms of phi2 lack the |gamma_e| factor.

    Quadrature is split into its cos(alpha) part (the pole value times
    cos(alpha)) and the rest; the printed form must equal
    ``rest / |gamma_e| + cos part``, while the full quadrature differs.
    """
    g = DEFAULT_CONSTANTS.gamma_e_abs
    pole = EnsembleAngles(0.0, 0.0)
    relation, raw = 0.0, 0.0
    for _ in range(draws):
        angles, p = random_angles(rng), random_protocol(rng)
        q = phases_quadrature(angles, p).phi2
        cos_part = math.cos(angles.alpha) * phases_quadrature(pole, p).phi2
        expected = (q - cos_part) / g + cos_part
        printed = phi2_analytic(angles, p, "cos_term_only")
        relation = max(relation, _rel(printed, expected, p.phase_scale))
        raw = max(raw, _rel(printed, q, p.phase_scale))
    ok = relation <= 1e-7 and raw > 1e-3
    return {"sin_terms_factor": 1 / g,
            "max_rel_residual_of_catalogued_relation": relation,
            "max_rel_printed_minus_quadrature": raw, "draws": draws}, ok


def check_ensemble(rng, draws):
    worst = 0.0
    for _ in range(draws):
        p = random_protocol(rng)
        q = ensemble_average_quadrature(p).value
        c = ensemble_average_closed(p).value
        worst = max(worst, _rel(q, c, p.prefactor))
    return {"max_diff_over_K": worst, "draws": draws}, worst <= 5e-7


def _special_draw(rng):
    return rng.uniform(0, TWO_PI), rng.uniform(0, TWO_PI)


def check_special(phi, rng, draws):
    """Diff a reference special-case display against the closed form."""
    raw, related = 0.0, 0.0
    for _ in range(draws):
        theta, x = _special_draw(rng)
        printed = printed_special_case(phi, 1.0, theta, x)
        closed = closed_form_value(1.0, theta, phi, x)
        raw = max(raw, abs(printed - closed))
        if math.isclose(phi, math.pi / 4):
            related = max(related, abs(printed + closed_form_value(1.0, 2 * theta, phi, -x)))
        else:
            related = max(related, abs(printed + closed))
    ok = raw > 1e-3 and related <= 1e-12
    return {"max_abs_printed_minus_closed_over_K": raw,
            "max_abs_residual_of_catalogued_relation": related}, ok


def check_rwa(ratios=(0.02, 0.01, 0.005)):
    gamma = DEFAULT_CONSTANTS.gamma_n
    devs = []
    for r in ratios:
        rabi = r * LARMOR
        drive = RfDrive(rabi, 0.0, 0.0)
        problem = BlochProblem.for_drive(Magnetization(0, 0, 1), LARMOR, drive,
                                         math.pi / rabi, gamma)
        traj = integrate_bloch(problem)
        ref = (rotation_z(LARMOR * traj.times) @ rotation_k(0.0, rabi * traj.times)) \
            @ np.array([0.0, 0.0, 1.0])
        devs.append(float(np.max(np.abs(traj.states - ref))))
    scaled = [d / r for d, r in zip(devs, ratios)]
    within = all(d <= 5 * r for d, r in zip(devs, ratios))
    linear = max(scaled) <= 1.5 * min(scaled)
    return {"ratios": list(ratios), "max_deviation": devs,
            "deviation_over_ratio": scaled}, within and linear


def check_misalignment_sign(ratio=0.01, phi_rf=0.3):
    """A same-phase y component rotates about phi_rf + atan2, not minus."""
    gamma = DEFAULT_CONSTANTS.gamma_n
    rabi = ratio * LARMOR
    drive = RfDrive(rabi / math.sqrt(2), rabi / math.sqrt(2), phi_rf)
    traj = integrate_bloch(BlochProblem.for_drive(Magnetization(0, 0, 1), LARMOR, drive,
                                                  math.pi / rabi, gamma))
    devs = {}
    for label, phi in (("minus", phi_rf - math.pi / 4), ("plus", phi_rf + math.pi / 4)):
        ref = (rotation_z(LARMOR * traj.times) @ rotation_k(phi, rabi * traj.times)) \
            @ np.array([0.0, 0.0, 1.0])
        devs[label] = float(np.max(np.abs(traj.states - ref)))
    ok = devs["plus"] <= 5 * ratio and devs["minus"] > 0.5
    return {"max_deviation_minus_rule": devs["minus"],
            "max_deviation_plus_rule": devs["plus"], "budget": 5 * ratio}, ok


def check_clock(rng, draws):
    """Stage-local windows give the closed form with 2 t_p -> t_p."""
    worst_local, worst_mixed = 0.0, 0.0
    for _ in range(draws):
        p = random_protocol(rng)
        local = ensemble_average_quadrature(p, clock="local").value
        worst_local = max(worst_local, _rel(local, ensemble_average_closed(p, "local").value,
                                            p.prefactor))
        worst_mixed = max(worst_mixed, _rel(local, ensemble_average_closed(p).value,
                                            p.prefactor))
    ok = worst_local <= 5e-7 and worst_mixed > 1e-3
    return {"local_vs_local_closed_form_over_K": worst_local,
            "local_vs_global_closed_form_over_K": worst_mixed}, ok


def check_expanded_fields(rng, draws):
    worst = {"b2": 0.0, "b3": 0.0, "b2_resonant": 0.0, "b3_resonant": 0.0}
    b_max = 1.0
    for _ in range(draws):
        angles, p = random_angles(rng), random_protocol(rng)
        t = rng.uniform(0, 40e-6, 8)
        d, tim = p.drive, p.timing
        f2 = field_stage2(angles, p.omega, d, tim, b_max)(t)
        f3 = field_stage3(angles, p.omega, d, tim, b_max)(t)
        worst["b2"] = max(worst["b2"], float(np.max(np.abs(
            f2 - b2_expanded(angles, p.omega, d.rabi, d.phi_rf, tim.tau, b_max, t)))))
        worst["b3"] = max(worst["b3"], float(np.max(np.abs(
            f3 - b3_expanded(angles, p.omega, d.rabi, d.phi_rf, tim.tau, tim.t_p, b_max, t)))))
        worst["b2_resonant"] = max(worst["b2_resonant"], float(np.max(np.abs(
            f2 - b2_expanded_resonant(angles, p.omega, d.rabi, d.phi_rf, b_max, t)))))
        worst["b3_resonant"] = max(worst["b3_resonant"], float(np.max(np.abs(
            f3 - b3_expanded_resonant(angles, p.omega, d.rabi, d.phi_rf, tim.t_p, b_max, t)))))
    return {"max_abs_error_over_B_max": worst}, max(worst.values()) <= 1e-9


def check_resonance_condition(rng, draws):
    """Resonant phi1 equals the general phi1 at omega tau = pi only."""
    at_pi, at_half = 0.0, 0.0
    for _ in range(draws):
        angles, p = random_angles(rng), random_protocol(rng)
        reference = -4 * p.phase_scale * math.sin(angles.alpha) * math.sin(angles.beta)
        at_pi = max(at_pi, _rel(phi1_analytic(angles, p), reference, p.phase_scale))
        literal = p.replace(timing=SequenceTiming(0.5 / p.omega, p.timing.t_p,
                                                  p.timing.tau_corr))
        at_half = max(at_half, _rel(phi1_analytic(angles, literal), reference,
                                    p.phase_scale))
    ok = at_pi <= 1e-12 and at_half > 0.1
    return {"omega_tau_pi_max_rel_diff": at_pi,
            "two_tau_equals_inverse_omega_max_rel_diff": at_half}, ok


def check_methods_tau():
    omega = larmor_frequency(NvSample(31.2e-3))
    ratio = METHODS_INTERPULSE / resonant_tau(omega)
    return {"interpulse_s": METHODS_INTERPULSE, "pi_over_omega_s": resonant_tau(omega),
            "ratio": ratio}, abs(ratio - 0.5) <= 0.01


def check_geometry():
    g = hemisphere_integral(5e-9)
    ok = abs(g.i_x) <= g.error and abs(g.i_y) <= g.error and g.converged
    return {"i_x": g.i_x, "i_y": g.i_y, "i_f": g.i_f, "error": g.error,
            "converged": g.converged}, ok


def check_taylor_constant(rng, draws):
    """Sharp constant of |exact - small-angle| <= C max|phi|^3 is 10/3."""
    phi = np.full(4, 1e-3)
    at_equal = abs(sigma_z_values(*phi) - sigma_z_small_values(*phi)) / 1e-9
    x = rng.uniform(-0.1, 0.1, (draws, 4))
    m = np.max(np.abs(x), axis=1) ** 3
    ratio = np.abs(sigma_z_values(*x.T) - sigma_z_small_values(*x.T)) / m
    ok = abs(at_equal - 10 / 3) <= 1e-2 and ratio.max() <= 10 / 3 + 1e-9
    return {"ratio_at_equal_phases": at_equal, "max_ratio_random": float(ratio.max()),
            "fraction_above_one": float(np.mean(ratio > 1))}, ok


def check_small_angle_guard(rng):
    """Exact vs small-angle ensemble gap relative to K grows as r**2."""
    gaps = {}
    p0 = random_protocol(rng)
    for r in (1e-2, 5e-3):
        b_max = r * p0.omega / p0.gamma_e_abs
        p = p0.replace(b_max=b_max)
        exact = ensemble_average_quadrature(p, (48, 48), readout="exact").value
        small = ensemble_average_quadrature(p, (48, 48)).value
        gaps[r] = abs(exact - small) / p.prefactor
    scaling = gaps[1e-2] / gaps[5e-3]
    ok = gaps[1e-2] > 1e-4 and 3.0 <= scaling <= 5.0
    return {"gap_over_K_at_1e-2": gaps[1e-2], "gap_over_K_at_5e-3": gaps[5e-3],
            "scaling_ratio": scaling, "guard": 1e-4}, ok


CATALOGUE = (
    ("general_phases", "phi1, phi3, phi4 and the uniform-gamma phi2 closed forms match "
     "quadrature within 1e-7 of 4 B_max |gamma_e| / omega", check_general_phases),
    ("resonant_phases", "resonant closed forms match quadrature at omega tau = pi within "
     "1e-7", check_resonant_phases),
    ("phi2_gamma_factor", "the printed phi2 carries |gamma_e| only on its cos(alpha) term: "
     "its sin(alpha) terms equal quadrature divided by |gamma_e|", check_phi2_gamma),
    ("ensemble_closed_form", "uniform-measure ensemble quadrature equals the closed form "
     "within 5e-7 K", check_ensemble),
    ("special_case_phi0", "phi_rf = 0 display differs from the closed form by a global sign",
     lambda rng, n: check_special(0.0, rng, n)),
    ("special_case_phi_pi_2", "phi_rf = pi/2 display differs from the closed form by a "
     "global sign", lambda rng, n: check_special(math.pi / 2, rng, n)),
    ("special_case_phi_pi_4", "phi_rf = pi/4 display uses full angles: it equals minus the "
     "closed form at (2 theta, -X)", lambda rng, n: check_special(math.pi / 4, rng, n)),
    ("rwa_budget", "Bloch oracle vs R_z R_k closed form within 5 Omega/omega, linear in "
     "Omega/omega within 50%", lambda rng, n: check_rwa()),
    ("misalignment_sign", "a same-phase y RF component rotates about phi_rf + atan2(Oy, Ox); "
     "the reference substitution uses minus", lambda rng, n: check_misalignment_sign()),
    ("clock_convention", "stage-local windows reproduce the closed form with 2 t_p -> t_p",
     check_clock),
    ("expanded_fields", "expanded b2/b3 forms equal the composition form within "
     "1e-9 B_max", check_expanded_fields),
    ("resonance_condition", "general phi1 reduces to the resonant phi1 at omega tau = pi, "
     "not at 2 tau = 1/omega", check_resonance_condition),
    ("methods_tau", "the 188.1 ns interpulse delay is half of pi/omega at 31.2 mT (ratio "
     "0.5 within 1%)", lambda rng, n: check_methods_tau()),
    ("geometry_symmetry", "|I_x| and |I_y| lie below the hemisphere quadrature error",
     lambda rng, n: check_geometry()),
    ("taylor_constant", "the sharp small-angle remainder constant is 10/3",
     check_taylor_constant),
    ("small_angle_guard", "exact vs small-angle ensemble gap at B_max|gamma_e|/omega = 1e-2 "
     "exceeds 1e-4 K and scales as its square", lambda rng, n: check_small_angle_guard(rng)),
)


def run_validation(seed=0, draws=50, names=None):
    """Run the catalogue; returns ``(passed, [Item, ...])``."""
    items = []
    for name, expectation, check in CATALOGUE:
        if names and name not in names:
            continue
        rng = np.random.default_rng([seed, len(items)])
        start = time.perf_counter()
        observed, ok = check(rng, draws)
        items.append(Item(name, expectation, _plain(observed), bool(ok),
                          time.perf_counter() - start))
    return all(i.passed for i in items), items


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value

