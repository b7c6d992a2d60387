"""Command-line interface: simulate, sweep, fit, validate, geometry.

Exit codes: 0 success, 1 validation-suite failure, 2 configuration or
argument error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ENGINES, load_config
from .errors import ConfigError, DomainError, NvCorrError
from .fields import hemisphere_integral
from .fitting import fit_sinusoid
from .io import OutputError, read_trace_csv, write_outputs
from .runner import run_sweep
from .units import parse_angle, parse_quantity
from .validate import run_validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _add_run_options(sub):
    sub.add_argument("--config", required=True, help="YAML experiment configuration")
    sub.add_argument("--engine", choices=ENGINES, help="override the configured engine")
    sub.add_argument("--out", help="output directory (default: config output.dir)")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for Monte-Carlo ensemble averaging")
    sub.add_argument("--workers", type=int, default=1, help="worker processes")
    sub.add_argument("--json", action="store_true", help="print the summary as JSON")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nvcorr", description="NV correlation spectroscopy under RF control")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="compute one trace")
    _add_run_options(sim)
    sim.add_argument("--phi-rf", help="RF phase, e.g. 'pi/4' (default: first configured)")
    sim.add_argument("--theta", help="rotation angle Omega t_p (default: first configured)")

    sweep = subs.add_parser("sweep", help="compute the configured (phi_rf, Omega) grid")
    _add_run_options(sweep)

    fit = subs.add_parser("fit", help="fit a sinusoid to trace CSV files")
    fit.add_argument("paths", nargs="+")
    fit.add_argument("--omega", help="fit frequency, e.g. '1.33 MHz' (default: from file)")
    fit.add_argument("--json", action="store_true")

    val = subs.add_parser("validate", help="run the reconciliation suite")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--draws", type=int, default=50, help="random draws per item")
    val.add_argument("--out", help="write the report as JSON to this file")
    val.add_argument("--json", action="store_true")

    geo = subs.add_parser("geometry", help="hemisphere integral of the dipolar functions")
    geo.add_argument("--depth", default="5 nm")
    geo.add_argument("--order", type=int, default=24)
    geo.add_argument("--json", action="store_true")
    return parser


def _print_fits(summary):
    print(f"{'phi_rf':>10} {'theta':>10} {'amplitude/K':>14} {'cos ratio':>12} "
          f"{'sin ratio':>12}")
    for entry in summary["traces"]:
        meta, fit, ratio = entry["metadata"], entry["fit"], entry["ratio"]
        amp = fit["amplitude"] / meta["prefactor"] if fit else float("nan")
        cos = ratio["cos"] if ratio else float("nan")
        sin = ratio["sin"] if ratio else float("nan")
        print(f"{meta['phi_rf_rad']:10.6f} {meta['theta_rad']:10.6f} {amp:14.8f} "
              f"{cos:12.8f} {sin:12.8f}")
    for warning in summary["report"]["warnings"]:
        print(f"warning: {warning}")


def _run(args, single):
    config = load_config(args.config)
    if args.engine:
        config = config.replace(engine=args.engine)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    if single:
        phi = parse_angle(args.phi_rf) if args.phi_rf else config.phi_rf[0]
        if args.theta:
            if config.t_p == 0:
                raise ConfigError("--theta needs t_p > 0", "timing.t_p")
            rabi = parse_angle(args.theta) / config.t_p
        else:
            rabi = config.rabi[0]
        config = config.replace(phi_rf=(phi,), rabi=(rabi,))
    result = run_sweep(config, workers=args.workers, seed=args.seed)
    summary = write_outputs(result, config, args.out or config.output_dir)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        _print_fits(summary)
    return EXIT_OK


def _fit(args):
    rows = []
    for path in args.paths:
        trace = read_trace_csv(path)
        if args.omega:
            omega = parse_quantity(args.omega, "frequency")
        elif "omega_rad_s" in trace.metadata:
            omega = float(trace.metadata["omega_rad_s"])
        else:
            raise ConfigError("no omega_rad_s metadata in file; pass --omega", "--omega")
        rows.append({"file": path, "omega_rad_s": omega,
                     **fit_sinusoid(trace, omega).as_dict()})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'a':>14} {'b':>14} {'c':>14} {'amplitude':>14} {'phase':>10}  file")
        for r in rows:
            print(f"{r['a']:14.6e} {r['b']:14.6e} {r['c']:14.6e} {r['amplitude']:14.6e} "
                  f"{r['phase']:10.6f}  {r['file']}")
    return EXIT_OK


def _validate(args):
    passed, items = run_validation(seed=args.seed, draws=args.draws)
    report = {"passed": passed, "items": [i.as_dict() for i in items]}
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump(report, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise OutputError(f"cannot write {args.out}: {exc.strerror}") from exc
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for item in items:
            print(f"{'PASS' if item.passed else 'FAIL'}  {item.name}: {item.expectation}")
            for key, value in item.observed.items():
                print(f"      {key} = {value}")
        print("suite:", "PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VALIDATION


def _geometry(args):
    depth = parse_quantity(args.depth, "length")
    g = hemisphere_integral(depth, args.order)
    row = {"depth_m": depth, "order": g.order, "i_x": g.i_x, "i_y": g.i_y, "i_f": g.i_f,
           "error": g.error, "converged": g.converged}
    if args.json:
        print(json.dumps(row, indent=2))
    else:
        print(f"{'I_x':>24} {'I_y':>24} {'I_f':>24} {'error':>12}")
        print(f"{g.i_x:24.16e} {g.i_y:24.16e} {g.i_f:24.16e} {g.error:12.3e}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"simulate": lambda a: _run(a, True), "sweep": lambda a: _run(a, False),
                "fit": _fit, "validate": _validate, "geometry": _geometry}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NvCorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
