"""Trace CSV files and the run summary JSON.

Trace CSV layout::

    # engine=closed-form
    # phi_rf_rad=0.0
    # ...
    tau_corr_s,signal
    6e-05,-1.23e-06
    ...

Metadata lines are ``# key=value`` with values in ``repr`` form; data
columns use ``repr`` floats so that reading a file back is bit-exact.
The summary layout is :data:`SUMMARY_SCHEMA`.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import NvCorrError
from .fitting import Trace

SCHEMA_VERSION = 1

_FIT = {
    "type": ["object", "null"],
    "required": ["a", "b", "c", "amplitude", "phase", "rms_residual"],
    "properties": {k: {"type": "number"}
                   for k in ("a", "b", "c", "amplitude", "phase", "rms_residual")},
}

SUMMARY_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "engine", "config", "references", "traces", "report"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "engine": {"enum": ["closed-form", "quadrature", "oracle"]},
        "config": {"type": "object"},
        "references": {
            "type": "array",
            "items": {"type": "object", "required": ["phi_rf_rad", "file", "fit"],
                      "properties": {"phi_rf_rad": {"type": "number"},
                                     "file": {"type": "string"}, "fit": _FIT}},
        },
        "traces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["file", "metadata", "fit", "ratio"],
                "properties": {
                    "file": {"type": "string"},
                    "metadata": {"type": "object"},
                    "fit": _FIT,
                    "ratio": {"type": ["object", "null"],
                              "required": ["cos", "sin"],
                              "properties": {"cos": {"type": "number"},
                                             "sin": {"type": "number"}}},
                },
            },
        },
        "report": {
            "type": "object",
            "required": ["warnings", "special_cases"],
            "properties": {
                "warnings": {"type": "array", "items": {"type": "string"}},
                "special_cases": {
                    "type": "array",
                    "items": {"type": "object",
                              "required": ["phi_rf_rad", "theta_rad", "closed_form",
                                           "printed", "difference", "relation"]},
                },
            },
        },
    },
}


class OutputError(NvCorrError, OSError):
    """Writing or reading an output file failed."""


def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return repr(value) if not isinstance(value, str) else value


def _parse(text):
    for convert in (int, float):
        try:
            return convert(text)
        except ValueError:
            pass
    if text in ("True", "False"):
        return text == "True"
    return text


def trace_to_csv(trace):
    lines = [f"# {key}={_format(value)}" for key, value in trace.metadata.items()]
    lines.append("tau_corr_s,signal")
    lines.extend(f"{float(t)!r},{float(s)!r}" for t, s in zip(trace.tau_corr, trace.signal))
    return "\n".join(lines) + "\n"


def read_trace_csv(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror}") from exc
    meta, tau, sig = {}, [], []
    header_seen = False
    for n, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = _parse(value)
        elif not header_seen:
            if line.strip() != "tau_corr_s,signal":
                raise OutputError(f"{path}:{n}: expected header 'tau_corr_s,signal'")
            header_seen = True
        elif line.strip():
            try:
                t, s = line.split(",")
                tau.append(float(t))
                sig.append(float(s))
            except ValueError:
                raise OutputError(f"{path}:{n}: malformed row {line!r}") from None
    return Trace(np.array(tau), np.array(sig), meta)


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc


def trace_name(phi_index, rabi_index):
    suffix = "ref" if rabi_index < 0 else f"r{rabi_index:02d}"
    return f"trace_p{phi_index:02d}_{suffix}.csv"


def build_summary(result, config, names, ref_names):
    traces = []
    for trace, fit, ratio, name in zip(result.traces, result.fits, result.ratios, names):
        traces.append({
            "file": name,
            "metadata": trace.metadata,
            "fit": fit.as_dict() if fit else None,
            "ratio": {"cos": ratio.cos, "sin": ratio.sin} if ratio else None,
        })
    references = [{"phi_rf_rad": trace.metadata["phi_rf_rad"], "file": name,
                   "fit": fit.as_dict() if fit else None}
                  for (trace, fit), name in zip(result.references, ref_names)]
    return {
        "schema_version": SCHEMA_VERSION,
        "engine": config.engine,
        "config": config.echo(),
        "references": references,
        "traces": traces,
        "report": result.report,
    }


def write_outputs(result, config, out_dir):
    """Write every trace and ``summary.json``; returns the summary dict."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out_dir}: {exc.strerror}") from exc
    n_rabi = len(config.rabi)
    names, ref_names = [], []
    for i, trace in enumerate(result.traces):
        name = trace_name(i // n_rabi, i % n_rabi)
        _write(os.path.join(out_dir, name), trace_to_csv(trace))
        names.append(name)
    for p, (trace, _) in enumerate(result.references):
        name = trace_name(p, -1)
        _write(os.path.join(out_dir, name), trace_to_csv(trace))
        ref_names.append(name)
    summary = build_summary(result, config, names, ref_names)
    _write(os.path.join(out_dir, "summary.json"),
           json.dumps(summary, indent=2, allow_nan=False) + "\n")
    return summary
