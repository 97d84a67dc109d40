"""Command-line front end: solve, certify, freq, sweep, validate.

Runs are driven by a JSON config (schema runconfig-v1, documented in
docs/run-config.md); every field can be overridden on the command line.
Artifacts avoid wall-clock content so a deterministic run reproduces
byte-identical outputs.

Exit codes: 0 ok, 2 parse/input error, 3 infeasible, 4 stopped at a limit
without an incumbent, 10 internal error.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import freqdyn, netdata, sched
from .drcc import DRCCParams
from .netdata import CaseError, load_case, load_scenarios, validate_case
from .sched import BuildOptions, ScheduleSolution, build_model, \
    cost_breakdown, extract_solution, preflight
from .solver import ExternalBridge, SolveOptions, SolverError, solve_misocp

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT_NO_INCUMBENT = 4
EXIT_INTERNAL = 10

CONFIG_SCHEMA = "runconfig-v1"
ENV_EXTERNAL = "FREQSCHED_EXTERNAL_SOLVER"


class ConfigError(Exception):
    pass


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if doc.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(f"expected schema {CONFIG_SCHEMA!r} in {path}")
    doc.setdefault("mode", "caseII")
    doc.setdefault("drcc", {})
    doc.setdefault("build", {})
    doc.setdefault("solve", {})
    doc.setdefault("report", {})
    base = path.parent
    for key in ("case", "scenarios", "outdir"):
        if key in doc and not Path(doc[key]).is_absolute():
            doc[key] = str(base / doc[key])
    return doc


def _drcc_from_config(doc):
    d = doc.get("drcc", {})
    return DRCCParams(
        eta=d.get("eta", 0.95), alpha=d.get("alpha", 0.0),
        dpl_max=d.get("dpl_max", 0.0), segments=d.get("segments", 8),
        range_mult=d.get("range_mult", 12.0), big_m=d.get("big_m"),
        big_m_prime=d.get("big_m_prime"))


def _solve_options(doc, log=None):
    s = doc.get("solve", {})
    return SolveOptions(
        rel_gap=s.get("rel_gap", 1e-4), node_limit=s.get("node_limit", 200000),
        time_limit=s.get("time_limit", 3600.0),
        deterministic=s.get("deterministic", True), seed=s.get("seed", 0),
        log=log)


def _build_options(doc):
    b = doc.get("build", {})
    return BuildOptions.case_mode(
        doc.get("mode", "caseII"), drcc=_drcc_from_config(doc),
        allow_dpc=b.get("allow_dpc", True),
        periods_limit=b.get("periods_limit", 0))


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _solution_tables(case, sol):
    """CSV tables per variable family, deterministic order."""
    tables = {}

    def rows_to_csv(header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    rows = []
    for t in sol.periods:
        for s in sol.scenarios:
            rec = sol.at(t, s)
            for g in case.sg_units:
                rows.append([t, s, g.id, rec["y"][g.id],
                             repr(rec["su"][g.id]), repr(rec["p"][g.id]),
                             repr(rec["q"][g.id]), repr(rec["r"][g.id])])
    tables["commitments.csv"] = rows_to_csv(
        ["period", "scenario", "unit", "on", "startup", "p_mw", "q_mvar",
         "pfr_mw"], rows)

    rows = []
    for t in sol.periods:
        for s in sol.scenarios:
            rec = sol.at(t, s)
            for b in case.storage_units:
                rows.append([t, s, b.id, repr(rec["pb"][b.id]),
                             repr(rec["soc"][b.id]), repr(rec["hsb"][b.id]),
                             repr(rec["pcb"][b.id])])
    tables["storage.csv"] = rows_to_csv(
        ["period", "scenario", "unit", "p_mw", "soc", "h_si_mws_per_hz",
         "dpc_share_mw"], rows)

    rows = []
    for t in sol.periods:
        for s in sol.scenarios:
            rec = sol.at(t, s)
            for w in case.wind_units:
                rows.append([t, s, w.id, "wind", repr(rec["pw"][w.id]),
                             repr(rec["hsw"][w.id])])
            for m in case.pv_units:
                rows.append([t, s, m.id, "pv", repr(rec["pm"][m.id]),
                             repr(0.0)])
    tables["ibg.csv"] = rows_to_csv(
        ["period", "scenario", "unit", "kind", "p_mw", "h_si_mws_per_hz"],
        rows)

    rows = []
    for t in sol.periods:
        for s in sol.scenarios:
            rec = sol.at(t, s)
            for l in case.loads:
                rows.append([t, s, l.id, repr(rec["shp"][l.id]),
                             repr(rec["shq"][l.id])])
    tables["shedding.csv"] = rows_to_csv(
        ["period", "scenario", "load", "p_shed_mw", "q_shed_mvar"], rows)

    rows = []
    for t in sol.periods:
        for s in sol.scenarios:
            rec = sol.at(t, s)
            rows.append([t, s, repr(rec["p_import"]), repr(rec["q_import"]),
                         repr(rec["dpd_mu"]), repr(rec["h_total"]),
                         repr(rec["pfr"]), repr(rec["dpc"]),
                         repr(rec.get("x1", float("nan"))),
                         repr(rec.get("x2", float("nan")))])
    tables["frequency.csv"] = rows_to_csv(
        ["period", "scenario", "p_import_mw", "q_import_mvar", "dpd_mu_mw",
         "h_total", "r_total_mw", "dpc_mw", "x1", "x2"], rows)
    return tables


def cmd_solve(args):
    doc = load_config(args.config)
    if args.case_mode:
        doc["mode"] = args.case_mode
    if args.out:
        doc["outdir"] = args.out
    if args.rel_gap is not None:
        doc.setdefault("solve", {})["rel_gap"] = args.rel_gap
    if args.time_limit is not None:
        doc.setdefault("solve", {})["time_limit"] = args.time_limit
    outdir = Path(doc.get("outdir", "out"))
    case = load_case(doc["case"])
    scen = load_scenarios(doc["scenarios"], case)
    options = _build_options(doc)
    program, mm = build_model(case, scen, options)

    diags = preflight(program)
    if diags:
        print("infeasible before solve: " + "; ".join(diags), file=sys.stderr)
        return EXIT_INFEASIBLE

    log_lines = []

    def log(nodes, bound, incumbent):
        log_lines.append(f"node {nodes} bound {bound!r} incumbent "
                         f"{incumbent!r}")

    external = os.environ.get(ENV_EXTERNAL) or doc.get("solve", {}).get(
        "external_command")
    if external:
        bridge = ExternalBridge(external)
        point = bridge.solve(program)
        gap = 0.0
        stats_line = f"external solver: {external}"
    else:
        point, stats = solve_misocp(program, _solve_options(doc, log=log))
        gap = stats.gap
        stats_line = (f"nodes {stats.nodes} incumbents "
                      f"{stats.incumbent_updates} status {stats.status} "
                      f"gap {stats.gap!r}")

    if point.status == "infeasible":
        print("model infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    if point.status == "unbounded":
        print("model unbounded", file=sys.stderr)
        return EXIT_INTERNAL
    if point.status == "limit" and not np.isfinite(point.objective):
        print("hit a limit without an incumbent", file=sys.stderr)
        return EXIT_LIMIT_NO_INCUMBENT

    sol = extract_solution(case, scen, options, program, mm, point, gap=gap)
    _write(outdir / "solution.json", sol.to_json())
    _write(outdir / "model.cone", program.export_text())
    terms = cost_breakdown(case, sol)
    _write(outdir / "cost_breakdown.json",
           json.dumps(terms, indent=1, sort_keys=True) + "\n")
    _write(outdir / "solve.log",
           "\n".join(log_lines + [stats_line]) + "\n")
    for name, text in _solution_tables(case, sol).items():
        _write(outdir / name, text)
    print(f"status {point.status} objective {point.objective!r} gap {gap!r}")
    print(f"artifacts in {outdir}")
    return EXIT_OK


def cmd_certify(args):
    doc = load_config(args.config)
    sol_path = Path(args.solution) if args.solution else \
        Path(doc.get("outdir", "out")) / "solution.json"
    if not sol_path.exists():
        print(f"missing solution file {sol_path}", file=sys.stderr)
        return EXIT_PARSE
    try:
        sol = ScheduleSolution.from_dict(json.loads(sol_path.read_text()))
    except (json.JSONDecodeError, KeyError, sched.SchedError) as exc:
        print(f"cannot read solution: {exc}", file=sys.stderr)
        return EXIT_PARSE
    case = load_case(doc["case"])
    scen = load_scenarios(doc["scenarios"], case)
    outdir = Path(args.out or doc.get("outdir", "out"))
    dt = doc.get("report", {}).get("trace_dt", 1e-3)
    report = freqdyn.certify(sol, case, scen, rule=args.rule, dt=dt)
    _write(outdir / "certify_report.txt", report.to_text())
    _write(outdir / "certify_table.csv", report.table_csv())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["nadir_sim_hz"])
    for v in report.nadir_values():
        w.writerow([repr(v)])
    _write(outdir / "nadir_hist.csv", buf.getvalue())

    worst = report.worst_entry()
    if worst is not None:
        rec = sol.at(worst.period, worst.scenario)
        scene = freqdyn.FrequencyScene(
            h_sg=rec["h_sg"], h_storage=rec["h_storage"],
            h_wind=tuple(rec["h_wind"]), d0=scen.damping_d0(
                case, worst.period, worst.scenario),
            gamma=tuple(case.wind_gammas()), pfr=rec["pfr"],
            td=case.frequency_limits.td, dpl=max(worst.dpl_eff, 0.0),
            dpc=rec["dpc"])
        trace = freqdyn.simulate_swing(scene, dt,
                                       case.frequency_limits.td * 3.0)
        _write(outdir / "worst_trace.csv", trace.to_csv())
    print(report.to_text())
    return EXIT_OK


def cmd_freq(args):
    scene = freqdyn.FrequencyScene(
        h_sg=args.H, d0=args.D, pfr=args.R, td=args.Td, dpl=args.dPL,
        dpc=args.dPC)
    try:
        m = freqdyn.metrics(scene)
    except freqdyn.FreqDynError as exc:
        print(f"invalid scene: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(f"rocof_hzps {m['rocof']!r}")
    if m["closed_form_valid"]:
        print(f"nadir_time_s {m['t_nadir']!r}")
        print(f"nadir_hz {m['nadir']!r}")
    else:
        print("nadir_time_s invalid (past PFR delivery; closed form does"
              " not apply)")
        print("nadir_hz invalid")
    note = " (over-delivered PFR; physical value clamps at 0)" \
        if m["ss_overdelivered"] else ""
    print(f"steady_state_hz {m['steady_state']!r}{note}")
    if args.trace:
        horizon = args.horizon or max(3.0 * args.Td, 30.0)
        trace = freqdyn.simulate_swing(scene, args.dt, horizon)
        _write(Path(args.trace), trace.to_csv())
        print(f"trace written to {args.trace}")
    return EXIT_OK


def _scaled_inputs(case, scen, param, value):
    """Case/scenario copies for one sweep point."""
    if param == "ibg_scale":
        f = float(value)
        case = replace(
            case,
            wind_units=[replace(w, capacity=w.capacity * f,
                                hsw_max=w.hsw_max * f)
                        for w in case.wind_units],
            pv_units=[replace(m, capacity=m.capacity * f)
                      for m in case.pv_units],
            storage_units=[replace(b, pch_max=b.pch_max * f,
                                   pdch_max=b.pdch_max * f,
                                   energy=b.energy * f)
                           for b in case.storage_units])
        ibg = {w.id for w in case.wind_units} | {m.id for m in case.pv_units}
        values = {k: (v * f if k[2] in ibg else v)
                  for k, v in scen.values.items()}
        scen = replace(scen, values=values)
    return case, scen


def _sweep_point(payload):
    (doc, param, value) = payload
    case = load_case(doc["case"])
    scen = load_scenarios(doc["scenarios"], case)
    if param in ("alpha", "eta"):
        doc = json.loads(json.dumps(doc))
        doc.setdefault("drcc", {})[param] = float(value)
    else:
        case, scen = _scaled_inputs(case, scen, param, value)
    options = _build_options(doc)
    program, mm = build_model(case, scen, options)
    point, stats = solve_misocp(program, _solve_options(doc))
    if point.status not in ("optimal", "limit") or \
            not np.isfinite(point.objective):
        return [param, value, "", "", point.status]
    sol = extract_solution(case, scen, options, program, mm, point,
                           gap=stats.gap)
    horizon_h = len(sol.periods) * sol.dt_h
    avg_cost = sol.objective / horizon_h
    avg_import = sum(
        sol.probabilities[s] * sol.at(t, s)["p_import"]
        for t in sol.periods for s in sol.scenarios) / len(sol.periods)
    return [param, value, repr(avg_cost), repr(avg_import), point.status]


def cmd_sweep(args):
    doc = load_config(args.config)
    if args.case_mode:
        doc["mode"] = args.case_mode
    values = [float(v) for v in args.values.split(",")]
    if args.param not in ("alpha", "eta", "ibg_scale"):
        print(f"unknown sweep parameter {args.param!r}", file=sys.stderr)
        return EXIT_PARSE
    payloads = [(doc, args.param, v) for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "value", "avg_cost_per_h", "avg_import_mw",
                "status"])
    w.writerows(rows)
    out = Path(args.out or (Path(doc.get("outdir", "out")) / "sweep.csv"))
    _write(out, buf.getvalue())
    print(buf.getvalue(), end="")
    print(f"sweep written to {out}")
    return EXIT_OK


def cmd_validate(args):
    try:
        case = load_case(args.case)
    except CaseError as exc:
        print(f"case invalid: {exc}", file=sys.stderr)
        return EXIT_PARSE
    diags = validate_case(case)
    if args.scenarios:
        try:
            load_scenarios(args.scenarios, case)
        except CaseError as exc:
            diags.append(f"scenarios: {exc}")
    if diags:
        for d in diags:
            print(d)
        return EXIT_INFEASIBLE
    print("ok")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="freqsched",
        description="Frequency-secure microgrid scheduling (MISOCP with "
                    "robust islanding frequency constraints)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="build and solve a scheduling run")
    p.add_argument("--config", required=True)
    p.add_argument("--case-mode", choices=["base", "caseI", "caseII"])
    p.add_argument("--out")
    p.add_argument("--rel-gap", type=float, dest="rel_gap")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check a solved schedule by simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--solution")
    p.add_argument("--out")
    p.add_argument("--rule", choices=["robust", "mean"], default="robust")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("freq", help="closed-form frequency metrics for a scene")
    p.add_argument("--H", type=float, required=True,
                   help="total inertia, MWs/Hz")
    p.add_argument("--R", type=float, required=True, help="total PFR, MW")
    p.add_argument("--Td", type=float, default=10.0)
    p.add_argument("--D", type=float, required=True, help="damping, MW/Hz")
    p.add_argument("--dPL", type=float, required=True)
    p.add_argument("--dPC", type=float, default=0.0)
    p.add_argument("--trace", help="write a simulated trace CSV here")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("sweep", help="re-solve over one scalar parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True,
                   help="alpha | eta | ibg_scale")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--case-mode", choices=["base", "caseI", "caseII"])
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a case (and scenarios) file")
    p.add_argument("--case", required=True)
    p.add_argument("--scenarios")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CaseError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except sched.SchedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
