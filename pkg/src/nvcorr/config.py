"""Experiment configuration documents (YAML) and their validation.

Every quantity may carry a unit suffix (``"31.2 mT"``, ``"16.7 kHz"``,
``"30 us"``); bare numbers are SI.  Frequencies given in Hz are converted
to rad/s.  Errors name the offending field and its line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .core import (DEFAULT_CONSTANTS, NvSample, PhysicalConstants, larmor_frequency,
                   resonant_tau)
from .errors import ConfigError, DomainError
from .units import parse_angle, parse_quantity, parse_sweep

ENGINES = ("closed-form", "quadrature", "oracle")
CLOCKS = ("global", "local")


@dataclass(frozen=True)
class VppMap:
    """Linear calibration ``Omega = slope * Vpp + intercept`` (rad/s)."""

    slope: float
    intercept: float = 0.0

    def vpp(self, rabi):
        return (rabi - self.intercept) / self.slope


@dataclass(frozen=True)
class ExperimentConfig:
    sample: NvSample
    constants: PhysicalConstants
    tau: float
    t_p: float
    tau_corr: np.ndarray
    idle_offset: float
    rabi: tuple
    phi_rf: tuple
    misalignment: float = 0.0
    omega_rf: float | None = None
    vpp_map: VppMap | None = None
    engine: str = "closed-form"
    order: int = 16
    resolution: tuple = (32, 32)
    clock: str = "global"
    samples: int | None = None
    output_dir: str = "out"
    pl_sign: bool = False

    @property
    def omega(self):
        return larmor_frequency(self.sample, self.constants)

    @property
    def rotation_angles(self):
        return tuple(r * self.t_p for r in self.rabi)

    def replace(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)

    def echo(self):
        """Normalized SI view of the configuration, stable across runs."""
        return {
            "sample": {"b_ext_T": self.sample.b_ext, "depth_m": self.sample.depth,
                       "rho_m3": self.sample.rho, "b_max_T": self.sample.b_max},
            "constants": {"gamma_e_rad_s_T": self.constants.gamma_e,
                          "gamma_n_rad_s_T": self.constants.gamma_n},
            "timing": {"tau_s": self.tau, "t_p_s": self.t_p,
                       "tau_corr_start_s": float(self.tau_corr[0]),
                       "tau_corr_stop_s": float(self.tau_corr[-1]),
                       "tau_corr_count": int(self.tau_corr.size),
                       "idle_offset_s": self.idle_offset},
            "drive": {"rabi_rad_s": list(self.rabi), "phi_rf_rad": list(self.phi_rf),
                      "misalignment": self.misalignment, "omega_rf_rad_s": self.omega_rf},
            "engine": self.engine,
            "quadrature": {"order": self.order, "resolution": list(self.resolution),
                           "clock": self.clock, "samples": self.samples},
            "output": {"pl_sign": self.pl_sign},
        }


# -- node helpers ------------------------------------------------------------

def _line(node):
    return node.start_mark.line + 1


class _Section:
    """A YAML mapping node with remembered keys, for unknown-key checks."""

    def __init__(self, node, path, allowed):
        self.path = path
        self.node = node
        self.items = {}
        if node is None:
            return
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError("expected a mapping", path or None, _line(node))
        for key_node, value_node in node.value:
            key = key_node.value
            where = f"{path}.{key}" if path else key
            if key not in allowed:
                raise ConfigError(f"unknown key (allowed: {', '.join(allowed)})",
                                  where, _line(key_node))
            if key in self.items:
                raise ConfigError("duplicate key", where, _line(key_node))
            self.items[key] = value_node

    def where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.items

    def section(self, key, allowed):
        return _Section(self.items.get(key), self.where(key), allowed)

    def scalar(self, key, default=None, required=False):
        node = self.items.get(key)
        if node is None:
            if required:
                line = _line(self.node) if self.node is not None else None
                raise ConfigError("missing required field", self.where(key), line)
            return default, None
        if not isinstance(node, yaml.ScalarNode):
            raise ConfigError("expected a scalar value", self.where(key), _line(node))
        return node.value, node

    def sequence(self, key):
        node = self.items.get(key)
        if node is None:
            return None
        if isinstance(node, yaml.ScalarNode):
            return [node]
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError("expected a list", self.where(key), _line(node))
        return node.value

    def convert(self, key, parser, default=None, required=False):
        text, node = self.scalar(key, default, required)
        if node is None:
            return text
        try:
            return parser(text)
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc), self.where(key), _line(node)) from None


def _quantity(expected):
    return lambda text: parse_quantity(text, expected)


def _non_negative(section, key, value):
    if value is not None and value < 0:
        raise ConfigError(f"must be non-negative, got {value!r}", section.where(key),
                          _line(section.items[key]))
    return value


def _bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# -- parsing -----------------------------------------------------------------

def parse_config(text):
    """Validate a YAML document into an :class:`ExperimentConfig`."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed document: {getattr(exc, 'problem', exc)}",
                          None, mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty document")
    top = _Section(root, "", ("sample", "constants", "timing", "drive", "engine",
                              "quadrature", "output"))

    s = top.section("sample", ("b_ext", "depth", "rho", "b_max"))
    if s.node is None:
        raise ConfigError("missing required section", "sample", _line(root))
    b_ext = s.convert("b_ext", _quantity("field"), required=True)
    if not b_ext > 0:
        raise ConfigError("must be positive", s.where("b_ext"), _line(s.items["b_ext"]))
    sample = NvSample(
        b_ext=b_ext,
        depth=_non_negative(s, "depth", s.convert("depth", _quantity("length"), 5e-9)),
        rho=_non_negative(s, "rho", s.convert("rho", _quantity("density"), 6e28)),
        b_max=_non_negative(s, "b_max", s.convert("b_max", _quantity("field"), 1e-7)))

    c = top.section("constants", ("gamma_e", "gamma_n"))
    gamma_e = c.convert("gamma_e", _quantity("gyromagnetic"), DEFAULT_CONSTANTS.gamma_e)
    gamma_n = c.convert("gamma_n", _quantity("gyromagnetic"), DEFAULT_CONSTANTS.gamma_n)
    try:
        constants = PhysicalConstants(gamma_e=gamma_e, gamma_n=gamma_n)
    except DomainError as exc:
        raise ConfigError(str(exc), "constants", _line(c.node) if c.node else None) from None
    omega = constants.gamma_n * sample.b_ext

    t = top.section("timing", ("tau", "t_p", "tau_corr", "idle_offset"))
    tau_text, tau_node = t.scalar("tau", "auto")
    if str(tau_text).strip() == "auto":
        tau = resonant_tau(omega)
    else:
        tau = _non_negative(t, "tau", t.convert("tau", _quantity("time")))
    t_p = _non_negative(t, "t_p", t.convert("t_p", _quantity("time"), 30e-6))
    start, stop, count = t.convert("tau_corr", parse_sweep, (60e-6, 63e-6, 51))
    where = t.where("tau_corr")
    line = _line(t.items["tau_corr"]) if t.has("tau_corr") else None
    if count < 1:
        raise ConfigError("sweep count must be >= 1", where, line)
    if count > 1 and not start < stop:
        raise ConfigError("sweep start must be below stop", where, line)
    if start < 0:
        raise ConfigError("correlation times must be non-negative", where, line)
    tau_corr = np.linspace(start, stop, count)
    idle_offset = _non_negative(t, "idle_offset",
                                t.convert("idle_offset", _quantity("time"), 0.0))

    d = top.section("drive", ("rotation_angles", "rabi", "phi_rf", "misalignment",
                              "omega_rf", "vpp_map"))
    if d.has("rotation_angles") and d.has("rabi"):
        raise ConfigError("give either rotation_angles or rabi, not both",
                          d.where("rabi"), _line(d.items["rabi"]))
    rabi = _drive_rates(d, t_p)
    phi_rf = _list(d, "phi_rf", parse_angle) or [0.0]
    misalignment = d.convert("misalignment", float, 0.0)
    omega_rf_text, _ = d.scalar("omega_rf", "locked")
    omega_rf = None if str(omega_rf_text).strip() == "locked" else \
        d.convert("omega_rf", _quantity("frequency"))
    vpp_map = None
    if d.has("vpp_map"):
        v = d.section("vpp_map", ("slope", "intercept"))
        slope = v.convert("slope", _quantity("frequency"), required=True)
        if slope == 0:
            raise ConfigError("slope must be non-zero", v.where("slope"),
                              _line(v.items["slope"]))
        vpp_map = VppMap(slope, v.convert("intercept", _quantity("frequency"), 0.0))

    engine_text, engine_node = top.scalar("engine", "closed-form")
    if engine_text not in ENGINES:
        raise ConfigError(f"unknown engine {engine_text!r} (expected one of {ENGINES})",
                          "engine", _line(engine_node))

    q = top.section("quadrature", ("order", "resolution", "clock", "samples"))
    order = q.convert("order", int, 16)
    if order < 2:
        raise ConfigError("order must be >= 2", q.where("order"), _line(q.items["order"]))
    res_nodes = q.sequence("resolution")
    resolution = (32, 32)
    if res_nodes is not None:
        try:
            resolution = tuple(int(n.value) for n in res_nodes)
        except (ValueError, AttributeError):
            raise ConfigError("expected two integers", q.where("resolution"),
                              _line(q.items["resolution"])) from None
        if len(resolution) != 2 or resolution[0] < 2 or resolution[1] < 3:
            raise ConfigError("expected [n_alpha >= 2, n_beta >= 3]",
                              q.where("resolution"), _line(q.items["resolution"]))
    clock, clock_node = q.scalar("clock", "global")
    if clock not in CLOCKS:
        raise ConfigError(f"clock must be one of {CLOCKS}", q.where("clock"),
                          _line(clock_node))
    samples = q.convert("samples", int, None)
    if samples is not None and samples < 2:
        raise ConfigError("samples must be >= 2", q.where("samples"),
                          _line(q.items["samples"]))

    o = top.section("output", ("dir", "pl_sign"))
    output_dir, _ = o.scalar("dir", "out")
    pl_sign = o.convert("pl_sign", _bool, False)

    return ExperimentConfig(
        sample=sample, constants=constants, tau=tau, t_p=t_p, tau_corr=tau_corr,
        idle_offset=idle_offset, rabi=tuple(rabi), phi_rf=tuple(phi_rf),
        misalignment=misalignment, omega_rf=omega_rf, vpp_map=vpp_map,
        engine=engine_text, order=order, resolution=resolution, clock=clock,
        samples=samples, output_dir=output_dir, pl_sign=pl_sign)


def _list(section, key, parser):
    nodes = section.sequence(key)
    if nodes is None:
        return None
    values = []
    for node in nodes:
        if not isinstance(node, yaml.ScalarNode):
            raise ConfigError("expected a list of scalars", section.where(key), _line(node))
        try:
            values.append(parser(node.value))
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc), section.where(key), _line(node)) from None
    if not values:
        raise ConfigError("list must not be empty", section.where(key),
                          _line(section.items[key]))
    return values


def _drive_rates(section, t_p):
    """Total Rabi rates from ``rabi`` (frequencies) or ``rotation_angles``."""
    if section.has("rabi"):
        rates = _list(section, "rabi", _quantity("frequency"))
    else:
        angles = _list(section, "rotation_angles", parse_angle)
        if angles is None:
            angles = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi]
        if t_p == 0 and any(a != 0 for a in angles):
            raise ConfigError("rotation angles need t_p > 0",
                              section.where("rotation_angles"),
                              _line(section.items.get("rotation_angles", section.node))
                              if section.node is not None else None)
        rates = [a / t_p if t_p else 0.0 for a in angles]
    for r in rates:
        if r < 0:
            raise ConfigError("Rabi rates and rotation angles must be non-negative",
                              section.where("rabi" if section.has("rabi") else
                                            "rotation_angles"))
    return rates


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
