"""Sweep orchestration: (phi_rf, Omega) grid -> traces -> fits and ratios."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, Protocol, RfDrive, SequenceTiming
from .errors import NvCorrError
from .fitting import Trace, fit_sinusoid, quadrature_ratio
from .oracle import end_to_end_oracle
from .readout import (ensemble_average_closed, ensemble_average_montecarlo,
                      ensemble_average_quadrature,
                      misalignment_map, special_case)

SPECIAL_PHASES = (0.0, math.pi / 4, math.pi / 2)


def rf_start_phase(phi_rf, omega_rf, t1):
    """Generator phase at burst onset that refers the drive phase to t = 0.

    A burst started at ``t1`` with phase ``p`` plays ``cos(omega_rf (t - t1) + p)``;
    choosing ``p = phi_rf + omega_rf t1`` makes that ``cos(omega_rf t + phi_rf)``.
    """
    return (phi_rf + omega_rf * t1) % TWO_PI


def split_rabi(rabi, misalignment):
    """(Omega_x, Omega_y) with total rate ``rabi`` and ratio Omega_y / Omega_x."""
    omega_x = rabi / math.sqrt(1.0 + misalignment ** 2)
    return omega_x, misalignment * omega_x


@dataclass(frozen=True)
class WorkItem:
    phi_index: int
    rabi_index: int      # -1 marks the undriven reference
    phi_rf: float
    rabi: float


class SweepError(NvCorrError):
    """An engine failed for one grid point; carries the parameter tuple."""

    def __init__(self, message, item):
        self.item = item
        super().__init__(f"{message} (phi_rf={item.phi_rf!r}, Omega={item.rabi!r})")


def make_protocol(config, phi_rf, rabi, tau_corr):
    omega_x, omega_y = split_rabi(rabi, config.misalignment)
    drive = RfDrive(omega_x, omega_y, phi_rf, config.omega_rf)
    timing = SequenceTiming(config.tau, config.t_p, tau_corr + config.idle_offset)
    return Protocol(config.omega, drive, timing, config.sample.b_max,
                    config.constants.gamma_e_abs)


def evaluate_point(config, protocol, seed=0):
    if config.engine == "closed-form":
        if protocol.drive.omega_y == 0.0:
            return ensemble_average_closed(protocol, config.clock)
        return misalignment_map(protocol, config.clock)
    if config.engine == "quadrature":
        if config.samples is not None:
            return ensemble_average_montecarlo(protocol, config.samples, seed,
                                               config.clock, order=config.order)
        return ensemble_average_quadrature(protocol, config.resolution, config.clock,
                                           order=config.order)
    return end_to_end_oracle(protocol, config.constants.gamma_n, config.resolution,
                             config.clock, samples=config.samples, seed=seed)


def _run_item(args):
    config, item, seed = args
    values, warnings = [], set()
    for i, tau_corr in enumerate(config.tau_corr):
        protocol = make_protocol(config, item.phi_rf, item.rabi, float(tau_corr))
        try:
            # per-point seeds keep Monte-Carlo traces independent of scheduling
            result = evaluate_point(config, protocol, seed + i)
        except NvCorrError as exc:
            raise SweepError(str(exc), item) from exc
        values.append(result.value)
        warnings.update(result.warnings)
    sign = -1.0 if config.pl_sign else 1.0
    return np.array(values) * sign, tuple(sorted(warnings))


@dataclass(frozen=True)
class SweepResult:
    traces: tuple
    fits: tuple
    ratios: tuple
    references: tuple
    report: dict


def _trace_metadata(config, item):
    omega_x, omega_y = split_rabi(item.rabi, config.misalignment)
    meta = {
        "engine": config.engine,
        "clock": config.clock,
        "phi_rf_rad": item.phi_rf,
        "rabi_rad_s": item.rabi,
        "omega_x_rad_s": omega_x,
        "omega_y_rad_s": omega_y,
        "theta_rad": item.rabi * config.t_p,
        "t_p_s": config.t_p,
        "tau_s": config.tau,
        "omega_rad_s": config.omega,
        "prefactor": make_protocol(config, item.phi_rf, item.rabi, 0.0).prefactor,
        "idle_offset_s": config.idle_offset,
        "pl_sign": config.pl_sign,
    }
    if config.vpp_map is not None:
        meta["vpp"] = config.vpp_map.vpp(item.rabi)
    return meta


def run_sweep(config, workers=1, seed=0):
    """Evaluate every (phi_rf, Omega) pair over the correlation-time grid.

    Each phi_rf also gets an undriven reference trace for the contrast
    ratios.  Results are assembled in grid order, so they do not depend on
    ``workers``.
    """
    items = []
    for p, phi in enumerate(config.phi_rf):
        items.append(WorkItem(p, -1, phi, 0.0))
        items.extend(WorkItem(p, r, phi, rabi) for r, rabi in enumerate(config.rabi))
    jobs = [(config, item, seed) for item in items]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_item, jobs))
    else:
        outputs = [_run_item(job) for job in jobs]

    traces, fits, ratios, references, warnings = [], [], [], [], set()
    ref_fit = None
    for item, (signal, warn) in zip(items, outputs):
        warnings.update(warn)
        trace = Trace(config.tau_corr.copy(), signal, _trace_metadata(config, item))
        fit = _fit(trace, config.omega)
        if item.rabi_index < 0:
            ref_fit = fit
            references.append((trace, fit))
            continue
        traces.append(trace)
        fits.append(fit)
        ratios.append(quadrature_ratio(fit, ref_fit) if fit and ref_fit else None)
    report = {"warnings": sorted(warnings), "special_cases": special_case_report(config)}
    return SweepResult(tuple(traces), tuple(fits), tuple(ratios), tuple(references), report)


def _fit(trace, omega):
    if trace.tau_corr.size < 4:
        return None
    return fit_sinusoid(trace, omega)


def special_case_report(config):
    """Closed form against the reference special-case displays, per grid point."""
    entries = []
    if config.misalignment != 0.0:
        return entries
    for phi in config.phi_rf:
        if not any(math.isclose(phi, v, abs_tol=1e-12) for v in SPECIAL_PHASES):
            continue
        for rabi in config.rabi:
            protocol = make_protocol(config, phi, rabi, float(config.tau_corr[0]))
            if not protocol.is_resonant:
                continue
            case = special_case(phi, protocol)
            entries.append({
                "phi_rf_rad": phi,
                "theta_rad": rabi * config.t_p,
                "tau_corr_s": float(config.tau_corr[0]),
                "closed_form": case.signal.value,
                "printed": case.printed,
                "difference": case.difference,
                "relation": _RELATIONS[SPECIAL_PHASES.index(
                    min(SPECIAL_PHASES, key=lambda v: abs(v - phi)))],
            })
    return entries


_RELATIONS = (
    "printed display = -closed form (global sign)",
    "printed display = -closed form evaluated at (2 theta, -X) (full-angle structure)",
    "printed display = -closed form (global sign)",
)
