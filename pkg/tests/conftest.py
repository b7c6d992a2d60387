import math

import numpy as np
import pytest

from nvcorr.core import Protocol, RfDrive, SequenceTiming, TWO_PI

LARMOR = TWO_PI * 1.33e6

_acceptance = {}


def pytest_runtest_logreport(report):
    number = getattr(report, "acceptance", None)
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        entry = _acceptance.setdefault(number, {"title": report.acceptance_title, "ok": True})
        entry["ok"] = entry["ok"] and report.outcome == "passed"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.acceptance = marker.args[0]
        report.acceptance_title = marker.kwargs.get("title", "")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        entry = _acceptance[number]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_protocol(rabi=0.0, phi_rf=0.0, t_p=30e-6, tau_corr=60e-6, omega=LARMOR,
                  omega_y=0.0, b_max=1e-7):
    return Protocol(omega, RfDrive(rabi, omega_y, phi_rf),
                    SequenceTiming(math.pi / omega, t_p, tau_corr), b_max)


def random_resonant(rng, omega=LARMOR):
    return make_protocol(rabi=rng.uniform(0, 0.05) * omega, phi_rf=rng.uniform(0, TWO_PI),
                         t_p=rng.uniform(0, 40e-6), tau_corr=rng.uniform(0, 70e-6),
                         omega=omega)
