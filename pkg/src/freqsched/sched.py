"""Two-stage stochastic frequency-constrained microgrid scheduling model.

Assembles the full MISOCP from a case + scenario set: unit commitment with
min up/down logic, storage state of charge, the W-matrix SOC relaxation of
the AC power flow, PCC import, and the per-(period, scenario) robust
frequency blocks from `drcc`.  Slow-unit commitments are first stage
(equal across scenarios); everything else is second stage.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import drcc
from .conic import BINARY, ConicProgram
from .drcc import DRCCParams
from .solver import propagate_bounds

SQRT2 = math.sqrt(2.0)


class SchedError(Exception):
    pass


@dataclass
class BuildOptions:
    freq_constraints: bool = True     # False: Base Case
    allow_si: bool = False            # True: Case II
    allow_dpc: bool = True
    drcc: DRCCParams = field(default_factory=DRCCParams)
    periods_limit: int = 0            # 0: all periods

    @classmethod
    def case_mode(cls, mode, **kw):
        mode = mode.lower()
        if mode in ("base", "basecase"):
            return cls(freq_constraints=False, allow_si=True, **kw)
        if mode in ("casei", "i", "case1"):
            return cls(freq_constraints=True, allow_si=False, **kw)
        if mode in ("caseii", "ii", "case2"):
            return cls(freq_constraints=True, allow_si=True, **kw)
        raise SchedError(f"unknown case mode {mode!r}")


@dataclass
class ModelMap:
    """Variable handles by family, keyed by (t, s) and entity id."""
    periods: list
    scenarios: list
    v: dict = field(default_factory=dict)        # (family, t, s, id) -> handle
    nadir_blocks: dict = field(default_factory=dict)   # (t, s) -> NadirBlock
    rocof_rows: dict = field(default_factory=dict)
    ss_cones: dict = field(default_factory=dict)
    drcc_params: DRCCParams = None
    d0: dict = field(default_factory=dict)             # (t, s) -> MW/Hz

    def h(self, family, t, s, ident=""):
        return self.v[(family, t, s, ident)]


def _tag(t, s):
    return f"_t{t}_{s}"


def build_model(case, scenarios, options=None):
    """Assemble the scheduling MISOCP.  Returns (program, ModelMap)."""
    opt = options or BuildOptions()
    params = opt.drcc
    if params.dpl_max == 0.0:
        # islanding disturbance cannot exceed the interchange rating
        params = DRCCParams(**{**params.__dict__, "dpl_max": case.pcc.smax})
    lim = case.frequency_limits
    sbase = case.sbase
    periods = scenarios.periods
    if opt.periods_limit:
        periods = periods[:opt.periods_limit]
    scens = scenarios.scenarios
    dt = scenarios.dt_h

    prog = ConicProgram(f"{case.name}")
    mm = ModelMap(periods=list(periods), scenarios=list(scens),
                  drcc_params=params)

    half = prog.add_variable("half", lb=0.5, ub=0.5)
    pcc_cap = prog.add_variable("pcc_cap", lb=case.pcc.smax, ub=case.pcc.smax)
    br_cap = {}
    for k, br in enumerate(case.branches):
        br_cap[k] = prog.add_variable(f"smax_br{k}", lb=br.smax, ub=br.smax)

    by_bus = {b.id: {"sg": [], "st": [], "w": [], "pv": [], "ld": []}
              for b in case.buses}
    for g in case.sg_units:
        by_bus[g.bus]["sg"].append(g)
    for b in case.storage_units:
        by_bus[b.bus]["st"].append(b)
    for w in case.wind_units:
        by_bus[w.bus]["w"].append(w)
    for m in case.pv_units:
        by_bus[m.bus]["pv"].append(m)
    for l in case.loads:
        by_bus[l.bus]["ld"].append(l)

    V = mm.v

    def add(family, t, s, ident, *args, **kw):
        handle = prog.add_variable(f"{family}_{ident}{_tag(t, s)}" if ident
                                   else f"{family}{_tag(t, s)}", *args, **kw)
        V[(family, t, s, ident)] = handle
        return handle

    obj = {}

    def obj_add(handle, coef):
        obj[handle] = obj.get(handle, 0.0) + coef

    for t in periods:
        for s in scens:
            pi = scenarios.probabilities[s]
            tag = _tag(t, s)

            # -- units -------------------------------------------------------
            for g in case.sg_units:
                y = add("on", t, s, g.id, kind=BINARY)
                su = add("su", t, s, g.id, lb=0.0, ub=1.0)
                p = add("p", t, s, g.id, lb=0.0, ub=g.pmax)
                q = add("q", t, s, g.id, lb=min(g.qmin, 0.0),
                        ub=max(g.qmax, 0.0))
                r = add("r", t, s, g.id, lb=0.0, ub=g.pfr_max)
                prog.add_row({p: 1.0, y: -g.pmax}, "<=", 0.0,
                             name=f"pmax_{g.id}{tag}")
                prog.add_row({p: 1.0, y: -g.pmin}, ">=", 0.0,
                             name=f"pmin_{g.id}{tag}")
                prog.add_row({q: 1.0, y: -g.qmax}, "<=", 0.0,
                             name=f"qmax_{g.id}{tag}")
                prog.add_row({q: 1.0, y: -g.qmin}, ">=", 0.0,
                             name=f"qmin_{g.id}{tag}")
                prog.add_row({r: 1.0, y: -g.pfr_max}, "<=", 0.0,
                             name=f"rmax_{g.id}{tag}")
                prog.add_row({r: 1.0, p: g.pfr_ramp_share,
                              y: -g.pfr_ramp_share * g.pmax}, "<=", 0.0,
                             name=f"rheadroom_{g.id}{tag}")
                obj_add(su, pi * g.cost_startup)
                if g.klass == "fast":
                    obj_add(y, pi * dt * g.cost_run_fixed)
                else:
                    obj_add(p, pi * dt * g.cost_run_energy)

            for b in case.storage_units:
                pb = add("pb", t, s, b.id, lb=b.pch_max, ub=b.pdch_max)
                soc = add("soc", t, s, b.id, lb=b.soc_min, ub=b.soc_max)
                hsb = add("hsb", t, s, b.id, lb=0.0,
                          ub=(b.pdch_max - b.pch_max) if opt.allow_si else 0.0)
                pcb = add("pcb", t, s, b.id, lb=0.0,
                          ub=b.pdch_max - b.pch_max if opt.allow_dpc else 0.0)
                # instantaneous power window under SI swings (both signs)
                prog.add_row({pb: 1.0, hsb: 2.0 * lim.rocof_lim}, "<=",
                             b.pdch_max, name=f"si_dch_{b.id}{tag}")
                prog.add_row({pb: 1.0, hsb: -2.0 * lim.rocof_lim}, ">=",
                             b.pch_max, name=f"si_ch_{b.id}{tag}")
                # constant-power provision window
                prog.add_row({pb: 1.0, pcb: 1.0}, "<=", b.pdch_max,
                             name=f"pc_dch_{b.id}{tag}")
                prog.add_row({pb: 1.0, pcb: 1.0}, ">=", b.pch_max,
                             name=f"pc_ch_{b.id}{tag}")
                # energy window for the constant injection (ts is seconds)
                prog.add_row({pcb: b.ts / 3600.0, soc: -b.energy}, "<=", 0.0,
                             name=f"pc_energy_{b.id}{tag}")

            for w in case.wind_units:
                avail = scenarios.wind_avail(s, t, w.id)
                cap = scenarios.hsw_max(s, t, w.id, w.hsw_max)
                add("pw", t, s, w.id, lb=0.0, ub=avail)
                add("hsw", t, s, w.id, lb=0.0,
                    ub=cap if opt.allow_si else 0.0)

            for m in case.pv_units:
                add("pm", t, s, m.id, lb=0.0,
                    ub=scenarios.pv_avail(s, t, m.id))

            for l in case.loads:
                pl = scenarios.demand_p(s, t, l.id)
                ql = scenarios.demand_q(s, t, l.id)
                shp = add("shp", t, s, l.id, lb=0.0, ub=max(pl, 0.0))
                shq = add("shq", t, s, l.id, lb=0.0, ub=max(ql, 0.0))
                shq2 = add("shq2", t, s, l.id, lb=0.0)
                prog.add_rotated_cone(shq2, half, [shq])
                obj_add(shp, pi * dt * l.voll)
                obj_add(shq2, pi * dt * l.voll)

            pim = add("pim", t, s, "", lb=0.0, ub=case.pcc.smax)
            qim = add("qim", t, s, "", lb=-case.pcc.smax, ub=case.pcc.smax)
            prog.add_soc_cone(pcc_cap, [pim, qim])

            # -- network -----------------------------------------------------
            for bus in case.buses:
                add("wii", t, s, str(bus.id), lb=bus.vmin ** 2,
                    ub=bus.vmax ** 2)
            for k, br in enumerate(case.branches):
                vmax2 = 1.2 * max(b.vmax for b in case.buses) ** 2
                wr = add("wr", t, s, str(k), lb=-vmax2, ub=vmax2)
                wi = add("wi", t, s, str(k), lb=-vmax2, ub=vmax2)
                cwr = add("cwr", t, s, str(k), lb=-2 * vmax2, ub=2 * vmax2)
                cwi = add("cwi", t, s, str(k), lb=-2 * vmax2, ub=2 * vmax2)
                prog.add_row({cwr: 1.0, wr: -SQRT2}, "=", 0.0,
                             name=f"cwr{k}{tag}")
                prog.add_row({cwi: 1.0, wi: -SQRT2}, "=", 0.0,
                             name=f"cwi{k}{tag}")
                wii_i = V[("wii", t, s, str(br.from_bus))]
                wii_j = V[("wii", t, s, str(br.to_bus))]
                prog.add_rotated_cone(wii_i, wii_j, [cwr, cwi])
                fmax = br.smax
                fp_ij = add("fp", t, s, f"{br.from_bus}_{br.to_bus}",
                            lb=-fmax, ub=fmax)
                fq_ij = add("fq", t, s, f"{br.from_bus}_{br.to_bus}",
                            lb=-fmax, ub=fmax)
                fp_ji = add("fp", t, s, f"{br.to_bus}_{br.from_bus}",
                            lb=-fmax, ub=fmax)
                fq_ji = add("fq", t, s, f"{br.to_bus}_{br.from_bus}",
                            lb=-fmax, ub=fmax)
                g, b = br.g, br.b
                prog.add_row({fp_ij: 1.0, wii_i: -sbase * g, wr: sbase * g,
                              wi: sbase * b}, "=", 0.0, name=f"fp{k}{tag}")
                prog.add_row({fq_ij: 1.0, wii_i: sbase * b, wr: -sbase * b,
                              wi: sbase * g}, "=", 0.0, name=f"fq{k}{tag}")
                prog.add_row({fp_ji: 1.0, wii_j: -sbase * g, wr: sbase * g,
                              wi: -sbase * b}, "=", 0.0, name=f"fpr{k}{tag}")
                prog.add_row({fq_ji: 1.0, wii_j: sbase * b, wr: -sbase * b,
                              wi: -sbase * g}, "=", 0.0, name=f"fqr{k}{tag}")
                prog.add_soc_cone(br_cap[k], [fp_ij, fq_ij])
                prog.add_soc_cone(br_cap[k], [fp_ji, fq_ji])

            for bus in case.buses:
                units = by_bus[bus.id]
                prow = {}
                qrow = {}
                p_rhs = 0.0
                q_rhs = 0.0
                for g in units["sg"]:
                    prow[V[("p", t, s, g.id)]] = 1.0
                    qrow[V[("q", t, s, g.id)]] = 1.0
                for b in units["st"]:
                    prow[V[("pb", t, s, b.id)]] = 1.0
                for w in units["w"]:
                    prow[V[("pw", t, s, w.id)]] = 1.0
                for m in units["pv"]:
                    prow[V[("pm", t, s, m.id)]] = 1.0
                for l in units["ld"]:
                    prow[V[("shp", t, s, l.id)]] = 1.0
                    qrow[V[("shq", t, s, l.id)]] = 1.0
                    p_rhs += scenarios.demand_p(s, t, l.id)
                    q_rhs += scenarios.demand_q(s, t, l.id)
                if bus.id == case.pcc.bus:
                    prow[V[("pim", t, s, "")]] = 1.0
                    qrow[V[("qim", t, s, "")]] = 1.0
                if bus.shunt_b != 0.0:
                    qrow[V[("wii", t, s, str(bus.id))]] = sbase * bus.shunt_b
                for k, br in enumerate(case.branches):
                    if br.from_bus == bus.id:
                        prow[V[("fp", t, s, f"{br.from_bus}_{br.to_bus}")]] = -1.0
                        qrow[V[("fq", t, s, f"{br.from_bus}_{br.to_bus}")]] = -1.0
                    elif br.to_bus == bus.id:
                        prow[V[("fp", t, s, f"{br.to_bus}_{br.from_bus}")]] = -1.0
                        qrow[V[("fq", t, s, f"{br.to_bus}_{br.from_bus}")]] = -1.0
                prog.add_row(prow, "=", p_rhs, name=f"pbal{bus.id}{tag}")
                prog.add_row(qrow, "=", q_rhs, name=f"qbal{bus.id}{tag}")

            # -- aggregates and frequency blocks ------------------------------
            htot = add("htot", t, s, "", lb=0.0)
            hrow = {htot: 1.0}
            for g in case.sg_units:
                hrow[V[("on", t, s, g.id)]] = -g.inertia * g.pmax / lim.f0
            for b in case.storage_units:
                hrow[V[("hsb", t, s, b.id)]] = -1.0
            for w in case.wind_units:
                hrow[V[("hsw", t, s, w.id)]] = -1.0
            prog.add_row(hrow, "=", 0.0, name=f"hdef{tag}")

            rtot = add("rtot", t, s, "", lb=0.0)
            rrow = {rtot: 1.0}
            for g in case.sg_units:
                rrow[V[("r", t, s, g.id)]] = -1.0
            prog.add_row(rrow, "=", 0.0, name=f"rdef{tag}")

            dpc_tot = add("dpc", t, s, "", lb=0.0)
            crow = {dpc_tot: 1.0}
            for b in case.storage_units:
                crow[V[("pcb", t, s, b.id)]] = -1.0
            prog.add_row(crow, "=", 0.0, name=f"dpcdef{tag}")

            shed_cap = sum(l.rho * scenarios.demand_p(s, t, l.id)
                           for l in case.loads)
            dpd = add("dpd", t, s, "", lb=0.0, ub=max(shed_cap, 0.0))
            caprow = {dpd: 1.0}
            for l in case.loads:
                caprow[V[("shp", t, s, l.id)]] = l.rho
            prog.add_row(caprow, "<=", shed_cap, name=f"dpd_cap{tag}")
            prog.add_row({dpd: 1.0, pim: -1.0}, "<=", 0.0,
                         name=f"dpd_le_import{tag}")

            if opt.freq_constraints and case.pcc.smax > 0.0:
                d0 = scenarios.damping_d0(case, t, s)
                mm.d0[(t, s)] = d0
                wind_si = [(V[("hsw", t, s, w.id)], w.gamma)
                           for w in case.wind_units]
                mm.nadir_blocks[(t, s)] = drcc.build_nadir_block(
                    prog, htot, rtot, pim, dpd, wind_si, params,
                    lim.df_lim, lim.td, d0, tag=tag)
                mm.rocof_rows[(t, s)] = drcc.build_rocof_constraint(
                    prog, htot, pim, dpd, params, lim.rocof_lim, tag=tag)
                mm.ss_cones[(t, s)] = drcc.build_ss_constraint(
                    prog, rtot, dpc_tot, pim, dpd, wind_si, params,
                    lim.dfss_lim, d0, tag=tag)

    # -- intertemporal rows -------------------------------------------------
    for s in scens:
        for g in case.sg_units:
            for ti, t in enumerate(periods):
                y = V[("on", t, s, g.id)]
                su = V[("su", t, s, g.id)]
                if ti == 0:
                    # units start offline: a first-period commitment starts up
                    prog.add_row({su: 1.0, y: -1.0}, ">=", 0.0,
                                 name=f"su_{g.id}_t{t}_{s}")
                else:
                    yprev = V[("on", periods[ti - 1], s, g.id)]
                    prog.add_row({su: 1.0, y: -1.0, yprev: 1.0}, ">=", 0.0,
                                 name=f"su_{g.id}_t{t}_{s}")
                # min up: recent startups force the unit on
                up_win = periods[max(0, ti - g.min_up + 1):ti + 1]
                row = {V[("su", tau, s, g.id)]: 1.0 for tau in up_win}
                row[y] = row.get(y, 0.0) - 1.0
                prog.add_row(row, "<=", 0.0, name=f"minup_{g.id}_t{t}_{s}")
                # min down: a unit on min_down periods ago blocks recent startups
                dn_win = periods[max(0, ti - g.min_down + 1):ti + 1]
                row = {V[("su", tau, s, g.id)]: 1.0 for tau in dn_win}
                dn = ti - g.min_down
                if dn >= 0:
                    ydn = V[("on", periods[dn], s, g.id)]
                    row[ydn] = row.get(ydn, 0.0) + 1.0
                prog.add_row(row, "<=", 1.0, name=f"mindown_{g.id}_t{t}_{s}")

        for b in case.storage_units:
            for ti, t in enumerate(periods):
                soc = V[("soc", t, s, b.id)]
                pb = V[("pb", t, s, b.id)]
                if ti == 0:
                    prog.add_row({soc: b.energy, pb: b.eff * dt}, "=",
                                 b.soc_init * b.energy,
                                 name=f"socrec_{b.id}_t{t}_{s}")
                else:
                    socp = V[("soc", periods[ti - 1], s, b.id)]
                    prog.add_row({soc: b.energy, socp: -b.energy,
                                  pb: b.eff * dt}, "=", 0.0,
                                 name=f"socrec_{b.id}_t{t}_{s}")
            soc_T = V[("soc", periods[-1], s, b.id)]
            prog.add_row({soc_T: 1.0}, "=", b.soc_init,
                         name=f"soccyc_{b.id}_{s}")

    # non-anticipativity: slow-unit commitment is first stage
    s0 = scens[0]
    for s in scens[1:]:
        for g in case.sg_units:
            if g.klass != "slow":
                continue
            for t in periods:
                prog.add_row({V[("on", t, s, g.id)]: 1.0,
                              V[("on", t, s0, g.id)]: -1.0}, "=", 0.0,
                             name=f"nonanticip_on_{g.id}_t{t}_{s}")
                prog.add_row({V[("su", t, s, g.id)]: 1.0,
                              V[("su", t, s0, g.id)]: -1.0}, "=", 0.0,
                             name=f"nonanticip_su_{g.id}_t{t}_{s}")

    prog.set_objective(obj)
    return prog, mm


def preflight(program):
    """Interval-arithmetic infeasibility screen before any solve."""
    lb, ub = program.bounds_arrays()
    _, _, ok = propagate_bounds(program, lb, ub)
    return [] if ok else ["bound propagation proves the model infeasible"]


# -- solution extraction ------------------------------------------------------

@dataclass
class ScheduleSolution:
    case_name: str
    periods: list
    scenarios: list
    probabilities: dict
    dt_h: float
    eta: float
    alpha: float
    status: str
    objective: float
    gap: float
    records: dict          # (t, s) -> field dict
    soc_gaps: dict = field(default_factory=dict)   # (t, s, branch) -> slack
    x2_floor_binding: list = field(default_factory=list)

    def keys(self):
        return [(t, s) for t in self.periods for s in self.scenarios]

    def at(self, t, s):
        return self.records[(t, s)]

    def to_dict(self):
        return {
            "schema": "schedule-solution-v1",
            "case": self.case_name,
            "status": self.status,
            "objective": self.objective,
            "gap": self.gap,
            "eta": self.eta,
            "alpha": self.alpha,
            "dt_h": self.dt_h,
            "periods": self.periods,
            "scenarios": self.scenarios,
            "probabilities": self.probabilities,
            "records": {f"{t}|{s}": rec for (t, s), rec in
                        sorted(self.records.items(),
                               key=lambda kv: (kv[0][0], str(kv[0][1])))},
            "soc_gaps": {f"{t}|{s}|{k}": v for (t, s, k), v in
                         sorted(self.soc_gaps.items(),
                                key=lambda kv: (kv[0][0], str(kv[0][1]),
                                                kv[0][2]))},
            "x2_floor_binding": self.x2_floor_binding,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema") != "schedule-solution-v1":
            raise SchedError("not a schedule solution document")
        records = {}
        for key, rec in doc["records"].items():
            t, _, s = key.partition("|")
            records[(int(t), s)] = rec
        soc_gaps = {}
        for key, v in doc.get("soc_gaps", {}).items():
            t, s, k = key.split("|")
            soc_gaps[(int(t), s, int(k))] = v
        return cls(case_name=doc["case"], periods=doc["periods"],
                   scenarios=doc["scenarios"],
                   probabilities=doc["probabilities"], dt_h=doc["dt_h"],
                   eta=doc["eta"], alpha=doc["alpha"], status=doc["status"],
                   objective=doc["objective"], gap=doc["gap"],
                   records=records, soc_gaps=soc_gaps,
                   x2_floor_binding=doc.get("x2_floor_binding", []))


def extract_solution(case, scenarios, options, program, mm, point,
                     gap=0.0, int_tol=1e-6):
    """Unpack a solver point into a ScheduleSolution and verify its invariants."""
    if point.status not in ("optimal", "limit"):
        raise SchedError(f"no incumbent to extract (status {point.status})")
    x = point.values
    for h in program.binary_indices():
        if abs(x[h] - round(x[h])) > int_tol:
            raise SchedError(
                f"integrality residual {abs(x[h] - round(x[h])):.2e} above "
                f"tolerance on {program.variables[h].name}")
    opt = options or BuildOptions()
    lim = case.frequency_limits
    V = mm.v
    records = {}
    soc_gaps = {}
    floor_binding = []
    for t in mm.periods:
        for s in mm.scenarios:
            rec = {}
            rec["y"] = {g.id: round(float(x[V[("on", t, s, g.id)]]))
                        for g in case.sg_units}
            rec["su"] = {g.id: float(x[V[("su", t, s, g.id)]])
                         for g in case.sg_units}
            rec["p"] = {g.id: float(x[V[("p", t, s, g.id)]])
                        for g in case.sg_units}
            rec["q"] = {g.id: float(x[V[("q", t, s, g.id)]])
                        for g in case.sg_units}
            rec["r"] = {g.id: float(x[V[("r", t, s, g.id)]])
                        for g in case.sg_units}
            rec["pb"] = {b.id: float(x[V[("pb", t, s, b.id)]])
                         for b in case.storage_units}
            rec["soc"] = {b.id: float(x[V[("soc", t, s, b.id)]])
                          for b in case.storage_units}
            rec["hsb"] = {b.id: float(x[V[("hsb", t, s, b.id)]])
                          for b in case.storage_units}
            rec["pcb"] = {b.id: float(x[V[("pcb", t, s, b.id)]])
                          for b in case.storage_units}
            rec["pw"] = {w.id: float(x[V[("pw", t, s, w.id)]])
                         for w in case.wind_units}
            rec["hsw"] = {w.id: float(x[V[("hsw", t, s, w.id)]])
                          for w in case.wind_units}
            rec["pm"] = {m.id: float(x[V[("pm", t, s, m.id)]])
                         for m in case.pv_units}
            rec["shp"] = {l.id: float(x[V[("shp", t, s, l.id)]])
                          for l in case.loads}
            rec["shq"] = {l.id: float(x[V[("shq", t, s, l.id)]])
                          for l in case.loads}
            rec["shq2"] = {l.id: float(x[V[("shq2", t, s, l.id)]])
                           for l in case.loads}
            rec["p_import"] = float(x[V[("pim", t, s, "")]])
            rec["q_import"] = float(x[V[("qim", t, s, "")]])
            rec["dpd_mu"] = float(x[V[("dpd", t, s, "")]])
            rec["pfr"] = float(x[V[("rtot", t, s, "")]])
            rec["h_total"] = float(x[V[("htot", t, s, "")]])
            rec["dpc"] = float(x[V[("dpc", t, s, "")]])
            rec["h_sg"] = sum(g.inertia * g.pmax / lim.f0 * rec["y"][g.id]
                              for g in case.sg_units)
            rec["h_storage"] = sum(rec["hsb"].values())
            rec["h_wind"] = [rec["hsw"][w.id] for w in case.wind_units]
            rec["wii"] = {str(b.id): float(x[V[("wii", t, s, str(b.id))]])
                          for b in case.buses}
            blk = mm.nadir_blocks.get((t, s))
            if blk is not None:
                rec["x1"] = float(x[blk.x1])
                rec["x2"] = float(x[blk.x2])
                rec["z"] = {n: round(float(x[h])) for n, h in blk.z.items()}
                if rec["x2"] <= blk.d + 1e-6:
                    floor_binding.append([t, s])
            for k, br in enumerate(case.branches):
                wii_i = float(x[V[("wii", t, s, str(br.from_bus))]])
                wii_j = float(x[V[("wii", t, s, str(br.to_bus))]])
                wr = float(x[V[("wr", t, s, str(k))]])
                wi = float(x[V[("wi", t, s, str(k))]])
                soc_gaps[(t, s, k)] = wii_i * wii_j - (wr * wr + wi * wi)
            records[(t, s)] = rec

    sol = ScheduleSolution(
        case_name=case.name, periods=list(mm.periods),
        scenarios=list(mm.scenarios),
        probabilities=dict(scenarios.probabilities), dt_h=scenarios.dt_h,
        eta=mm.drcc_params.eta, alpha=mm.drcc_params.alpha,
        status=point.status, objective=float(point.objective),
        gap=float(gap), records=records, soc_gaps=soc_gaps,
        x2_floor_binding=floor_binding)
    _verify_invariants(case, scenarios, sol)
    return sol


def _verify_invariants(case, scenarios, sol):
    tol = 1e-6
    periods = sol.periods
    for s in sol.scenarios:
        for b in case.storage_units:
            prev = b.soc_init
            for t in periods:
                rec = sol.at(t, s)
                lhs = rec["soc"][b.id] * b.energy
                rhs = prev * b.energy - b.eff * rec["pb"][b.id] * sol.dt_h
                if abs(lhs - rhs) > tol * max(1.0, b.energy):
                    raise SchedError(
                        f"SoC recursion violated for {b.id} at ({t},{s}): "
                        f"{lhs} vs {rhs}")
                prev = rec["soc"][b.id]
        for g in case.sg_units:
            for t in periods:
                rec = sol.at(t, s)
                y = rec["y"][g.id]
                p = rec["p"][g.id]
                if p > g.pmax * y + 1e-5 or p < g.pmin * y - 1e-5:
                    raise SchedError(
                        f"dispatch outside committed bounds for {g.id} at "
                        f"({t},{s})")
    s0 = sol.scenarios[0]
    for s in sol.scenarios[1:]:
        for g in case.sg_units:
            if g.klass != "slow":
                continue
            for t in periods:
                if sol.at(t, s)["y"][g.id] != sol.at(t, s0)["y"][g.id]:
                    raise SchedError(
                        f"non-anticipativity violated for {g.id} at t={t}")


def cost_breakdown(case, sol):
    """Per-term objective totals; they sum to the reported objective."""
    terms = {"startup": 0.0, "running_fixed": 0.0, "running_energy": 0.0,
             "shed_p": 0.0, "shed_q_quadratic": 0.0}
    dt = sol.dt_h
    for t in sol.periods:
        for s in sol.scenarios:
            pi = sol.probabilities[s]
            rec = sol.at(t, s)
            for g in case.sg_units:
                terms["startup"] += pi * g.cost_startup * rec["su"][g.id]
                if g.klass == "fast":
                    terms["running_fixed"] += pi * dt * g.cost_run_fixed \
                        * rec["y"][g.id]
                else:
                    terms["running_energy"] += pi * dt * g.cost_run_energy \
                        * rec["p"][g.id]
            for l in case.loads:
                terms["shed_p"] += pi * dt * l.voll * rec["shp"][l.id]
                terms["shed_q_quadratic"] += pi * dt * l.voll \
                    * rec["shq2"][l.id]
    terms["total"] = sum(v for k, v in terms.items() if k != "total")
    return terms
