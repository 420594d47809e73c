"""Command-line front end: ``gridmodal pf|modal|sim|cases``.

Exit codes: 0 ok/stable, 1 input error, 2 power flow divergence, 3 unstable
spectrum, 4 eigen-solver failure, 5 simulation failure.  Failures print a
one-line JSON reason on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, reports
from .cases import BUNDLED, bundled_path, resolve_case
from .exceptions import (CaseError, DefectiveMode, GridModalError, InitializationFailed,
                         NoConvergence, NoGeneratorAtPvBus, PowerFlowError,
                         SimulationError, UnknownTarget, ZeroEigenvalue)
from .system_model import LineModel, parse_case

EXIT_OK, EXIT_INPUT, EXIT_PF, EXIT_UNSTABLE, EXIT_EIGEN, EXIT_SIM = range(6)

DEFAULT_OUT = "gridmodal_out"


class _Fail(Exception):
    def __init__(self, code, error, reason, **extra):
        self.code = code
        self.payload = {"error": error, "reason": reason, **extra}


def output_dir(flag) -> Path:
    return Path(flag or os.environ.get("GRIDMODAL_OUT") or DEFAULT_OUT)


def case_statistics(case) -> dict:
    return {
        "buses": case.n_bus,
        "branches": len(case.branches),
        "units": len(case.units),
        "unit_mva": "/".join(f"{u.mva_base:g}" for u in case.units),
        "load_mw": case.total_load_mw,
        "exact_pi": sum(br.model is LineModel.DISTRIBUTED_EXACT_PI for br in case.branches),
    }


def _load(name):
    try:
        path = resolve_case(name)
        return path, parse_case(path)
    except FileNotFoundError as exc:
        raise _Fail(EXIT_INPUT, "FileNotFound", str(exc)) from None
    except (CaseError, ValueError) as exc:
        raise _Fail(EXIT_INPUT, type(exc).__name__, str(exc)) from None


def _power_flow(case):
    from .power_flow import solve_power_flow
    try:
        return solve_power_flow(case)
    except PowerFlowError as exc:
        raise _Fail(EXIT_PF, type(exc).__name__, str(exc)) from None


def _assemble(case, pf):
    from .dynamics.assembly import assemble
    try:
        return assemble(case, pf)
    except (InitializationFailed, NoGeneratorAtPvBus, ValueError) as exc:
        raise _Fail(EXIT_INPUT, type(exc).__name__, str(exc)) from None


def _select_pss(case, flag):
    return case if flag == "on" else case.without_pss()


# -- commands -------------------------------------------------------------------------

def cmd_pf(args) -> int:
    path, case = _load(args.case)
    pf = _power_flow(case)
    out = output_dir(args.out)
    csv_path = reports.write_pf_csv(out / f"{case.name}_pf.csv", pf, case.base.s_base)
    reports.write_manifest(out / f"{case.name}_pf_manifest.json", "pf", path, {}, out, [csv_path])
    slack = pf.bus_ids.index(case.slack.id)
    print(f"{case.name}: converged in {pf.iterations} iterations, "
          f"mismatch {pf.max_mismatch:.3e} pu, slack P {pf.p_inj[slack] * case.base.s_base:.3f} MW")
    return EXIT_OK


def cmd_modal(args) -> int:
    from .small_signal import eigen_analysis, linearize
    path, case = _load(args.case)
    case = _select_pss(case, args.pss)
    system = _assemble(case, _power_flow(case))
    try:
        result = eigen_analysis(linearize(system))
    except (NoConvergence, DefectiveMode, ZeroEigenvalue) as exc:
        raise _Fail(EXIT_EIGEN, type(exc).__name__, str(exc)) from None
    out = output_dir(args.out)
    stem = f"{case.name}_modal_pss-{args.pss}"
    outputs = [reports.write_modal_csv(out / f"{stem}.csv", result)]
    if args.svg:
        outputs.append(reports.plot_eigenvalues(out / f"{stem}.svg", result,
                                                title=f"{case.name}, PSS {args.pss}"))
    reports.write_manifest(out / f"{stem}_manifest.json", "modal", path,
                           {"pss": args.pss, "svg": bool(args.svg)}, out, outputs)
    ld = result.least_damped
    if ld is not None:
        print(f"least damped: {ld.lam.real:.6g}{ld.lam.imag:+.6g}j  f={ld.freq_hz:.4f} Hz  "
              f"zeta={ld.damping_ratio:.4f}  {ld.category.value}")
    band = result.least_damped_in_band(0.3, 3.0)
    if band is not None:
        print(f"least damped in [0.3, 3) Hz: f={band.freq_hz:.4f} Hz  zeta={band.damping_ratio:.4f}")
    print("stable" if result.stable else "UNSTABLE")
    return EXIT_OK if result.stable else EXIT_UNSTABLE


def cmd_sim(args) -> int:
    from .time_domain import EVENT_GRAMMAR, SimOptions, parse_event, simulate
    path, case = _load(args.case)
    try:
        events = [parse_event(e) for e in args.event]
        opts = SimOptions(t_end=args.t_end, output_dt=args.output_dt)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, "BadEvent", str(exc), grammar=EVENT_GRAMMAR) from None
    case = _select_pss(case, args.pss)
    system = _assemble(case, _power_flow(case))
    try:
        ts = simulate(system, events, opts)
    except UnknownTarget as exc:
        raise _Fail(EXIT_INPUT, "UnknownTarget", exc.args[0]) from None
    except SimulationError as exc:
        raise _Fail(EXIT_SIM, type(exc).__name__, str(exc), t=getattr(exc, "t", None)) from None
    out = output_dir(args.out)
    stem = f"{case.name}_sim_pss-{args.pss}"
    outputs = [reports.write_timeseries_csv(out / f"{stem}.csv", ts)]
    if args.svg:
        for q in reports.PLOT_QUANTITIES:
            outputs.append(reports.plot_timeseries(out / f"{stem}_{q}.svg", ts, q,
                                                   title=f"{case.name}, PSS {args.pss}"))
    options = {"pss": args.pss, "events": list(args.event), "t_end": args.t_end,
               "output_dt": args.output_dt, "svg": bool(args.svg)}
    reports.write_manifest(out / f"{stem}_manifest.json", "sim", path, options, out, outputs)
    print(f"{case.name}: {len(ts.t)} samples, {ts.steps} steps, t_end {ts.t[-1]:g} s")
    return EXIT_OK


def cmd_cases(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("name", "buses", "branches", "units", "unit_mva", "load_mw", "exact_pi",
                "description"))
    for name, desc in BUNDLED.items():
        st = case_statistics(parse_case(bundled_path(name)))
        w.writerow((name, st["buses"], st["branches"], st["units"], st["unit_mva"],
                    f"{st['load_mw']:g}", st["exact_pi"], desc))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .time_domain import EVENT_GRAMMAR
    p = argparse.ArgumentParser(prog="gridmodal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gridmodal {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("case", help="case file path or bundled case name")
        sp.add_argument("--out", help="output directory (default $GRIDMODAL_OUT or ./gridmodal_out)")

    sp = sub.add_parser("pf", help="solve the power flow")
    common(sp)
    sp.set_defaults(func=cmd_pf)

    sp = sub.add_parser("modal", help="small-signal eigen-analysis")
    common(sp)
    sp.add_argument("--pss", choices=("on", "off"), default="on")
    sp.add_argument("--svg", action="store_true", help="also draw the eigenvalue map")
    sp.set_defaults(func=cmd_modal)

    sp = sub.add_parser("sim", help="time-domain simulation",
                        epilog=f"event grammar: {EVENT_GRAMMAR}; e.g. G1:pm:+5%%@40")
    common(sp)
    sp.add_argument("--event", action="append", default=[], metavar="SPEC",
                    help="input step, repeatable")
    sp.add_argument("--t-end", type=float, default=60.0)
    sp.add_argument("--output-dt", type=float, default=0.02)
    sp.add_argument("--pss", choices=("on", "off"), default="on")
    sp.add_argument("--svg", action="store_true", help="also plot the trajectories")
    sp.set_defaults(func=cmd_sim)

    sp = sub.add_parser("cases", help="list bundled cases")
    sp.set_defaults(func=cmd_cases)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(json.dumps(exc.payload, sort_keys=True), file=sys.stderr)
        return exc.code
    except GridModalError as exc:
        print(json.dumps({"error": type(exc).__name__, "reason": str(exc)}), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
