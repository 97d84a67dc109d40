"""Post-islanding frequency dynamics: closed-form metrics and an ODE oracle.

The closed forms give the maximum RoCoF, the nadir time/value while primary
frequency response is still ramping, and the steady-state deviation.  The
numerical swing-equation simulator is the independent oracle used to certify
schedules; it runs on a compiled kernel when available and falls back to the
pure-Python twin otherwise.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

try:
    from . import _swing as _kernel
    KERNEL = "compiled"
except ImportError:           # extension not built: pure-Python twin
    from . import _swing_py as _kernel
    KERNEL = "python"


def kernel_name():
    """Which swing integrator got selected at import ("compiled"/"python")."""
    return KERNEL


class FreqDynError(Exception):
    pass


class NonpositiveInertiaError(FreqDynError):
    pass


class NonpositiveDampingError(FreqDynError):
    pass


class DegeneratePFRError(FreqDynError):
    """No PFR: frequency declines toward steady state with no interior nadir."""


class ValidityError(FreqDynError):
    """Closed form requested outside its ramp-regime validity window."""


class StepSizeError(FreqDynError):
    pass


@dataclass
class FrequencyScene:
    """Aggregated one-machine view of the microgrid at the islanding instant.

    Inertias in MWs/Hz, damping in MW/Hz, powers in MW, times in seconds.
    """
    h_sg: float                      # aggregate synchronous inertia
    h_storage: float = 0.0           # total storage synthetic inertia
    h_wind: tuple = ()               # per wind unit synthetic inertia
    d0: float = 1.0                  # base load damping
    gamma: tuple = ()                # per wind unit damping-penalty coefficient
    pfr: float = 0.0                 # total PFR delivered by td
    td: float = 10.0
    dpl: float = 0.0                 # equivalent loss of generation
    dpc: float = 0.0                 # constant storage injection after nadir

    @property
    def h_total(self):
        return self.h_sg + self.h_storage + sum(self.h_wind)

    @property
    def si_total(self):
        return self.h_storage + sum(self.h_wind)

    @property
    def mpe_damping(self):
        return sum(g * h * h for g, h in zip(self.gamma, self.h_wind))

    @property
    def d_total(self):
        return self.d0 - self.mpe_damping

    def validate(self):
        if self.h_total <= 0:
            raise NonpositiveInertiaError(f"total inertia {self.h_total} <= 0")
        if self.d_total <= 0:
            raise NonpositiveDampingError(
                f"damping {self.d_total} <= 0 (wind SI penalty too large)")
        if self.pfr < 0 or self.dpl < 0 or self.td <= 0:
            raise FreqDynError("pfr, dpl must be >= 0 and td > 0")


@dataclass
class FrequencyTrace:
    """Time series of the deviation, its rate and component injections."""
    t: np.ndarray
    df: np.ndarray
    dfdt: np.ndarray
    p_pfr: np.ndarray
    p_si: np.ndarray
    p_mpe: np.ndarray
    p_c: np.ndarray
    nadir_detected: bool = False
    t_nadir: float = float("nan")
    df_nadir: float = float("nan")

    CSV_HEADER = "time_s,df_hz,dfdt_hzps,p_pfr_mw,p_si_mw,p_mpe_mw,p_c_mw"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER.split(","))
        for k in range(len(self.t)):
            w.writerow([repr(float(v)) for v in
                        (self.t[k], self.df[k], self.dfdt[k], self.p_pfr[k],
                         self.p_si[k], self.p_mpe[k], self.p_c[k])])
        return buf.getvalue()


# -- closed forms ------------------------------------------------------------

def rocof_max(scene):
    """Maximum instantaneous rate of change of frequency, at t = 0+."""
    scene.validate()
    return -scene.dpl / (2.0 * scene.h_total)


def nadir_time(scene):
    """Time of the frequency nadir under the PFR ramp regime."""
    scene.validate()
    if scene.dpl == 0.0:
        return 0.0
    if scene.pfr <= 0.0:
        raise DegeneratePFRError("nadir time undefined with zero PFR")
    H, D = scene.h_total, scene.d_total
    return (2.0 * H / D) * math.log(
        scene.td * D * scene.dpl / (2.0 * H * scene.pfr) + 1.0)


def nadir_time_valid(scene):
    """False when the closed form would place the nadir past the ramp end."""
    return nadir_time(scene) <= scene.td


def nadir(scene):
    """Frequency deviation at the nadir (negative for generation loss)."""
    scene.validate()
    if scene.dpl == 0.0:
        return 0.0
    t_n = nadir_time(scene)
    if t_n > scene.td:
        raise ValidityError(
            f"nadir time {t_n:.3f}s exceeds the PFR delivery time "
            f"{scene.td}s; the ramp-regime closed form does not apply")
    H, D = scene.h_total, scene.d_total
    arg = scene.td * D * scene.dpl / (2.0 * H * scene.pfr)
    return (2.0 * H * scene.pfr / (scene.td * D * D)) * math.log(arg + 1.0) \
        - scene.dpl / D


def steady_state(scene):
    """Quasi-steady deviation once PFR and the constant injection settled."""
    scene.validate()
    return (scene.pfr + scene.dpc - scene.dpl) / scene.d_total


def metrics(scene):
    """All closed-form metrics plus validity/clamp annotations."""
    out = {"rocof": rocof_max(scene)}
    ss = steady_state(scene)
    out["steady_state"] = ss
    out["ss_overdelivered"] = ss > 0.0   # PFR exceeds the loss; reported as-is
    if scene.dpl == 0.0:
        out.update(t_nadir=0.0, nadir=0.0, closed_form_valid=True)
        return out
    if scene.pfr <= 0.0:
        out.update(t_nadir=float("nan"), nadir=float("nan"),
                   closed_form_valid=False)
        return out
    t_n = nadir_time(scene)
    valid = t_n <= scene.td
    out["t_nadir"] = t_n
    out["closed_form_valid"] = valid
    out["nadir"] = nadir(scene) if valid else float("nan")
    return out


def _components(scene, t, df, dfdt, pc_active):
    ramp = np.where(t < scene.td, scene.pfr * t / scene.td, scene.pfr)
    p_si = -2.0 * scene.si_total * dfdt
    p_mpe = scene.mpe_damping * df
    return ramp, p_si, p_mpe, pc_active


def analytic_trajectory(scene, grid):
    """Evaluate the ramp-regime solution on grid points within [0, t_nadir]."""
    scene.validate()
    grid = np.asarray(grid, dtype=float)
    if scene.dpl == 0.0:
        z = np.zeros_like(grid)
        return FrequencyTrace(grid, z, z.copy(), *_components(scene, grid, z, z, z.copy()))
    t_n = nadir_time(scene)
    if np.any(grid < -1e-12) or np.any(grid > t_n * (1 + 1e-9) + 1e-12):
        raise ValidityError(
            f"grid must stay within [0, t_n={t_n:.4f}s] for the closed form")
    H, D = scene.h_total, scene.d_total
    amp = scene.dpl / D + 2.0 * H * scene.pfr / (scene.td * D * D)
    slope = scene.pfr / (scene.td * D)
    decay = np.exp(-D * grid / (2.0 * H))
    df = amp * (decay - 1.0) + slope * grid
    dfdt = -amp * D / (2.0 * H) * decay + slope
    pc = np.zeros_like(grid)
    ramp, p_si, p_mpe, pc = _components(scene, grid, df, dfdt, pc)
    return FrequencyTrace(grid, df, dfdt, ramp, p_si, p_mpe, pc,
                          nadir_detected=False, t_nadir=t_n)


MAX_KERNEL_STEPS = 20_000_000


def simulate_swing(scene, dt, horizon, hold=math.inf):
    """Integrate the swing equation; the independent certification oracle.

    The constant injection dpc switches on at the first detected upward zero
    crossing of the frequency derivative (the nadir, located by sub-step
    interpolation) and stays on for `hold` seconds; the default keeps it for
    the rest of the trace, matching the steady-state closed form.
    """
    scene.validate()
    if dt <= 0:
        raise StepSizeError("dt must be positive")
    stiff_cap = 0.1 * scene.h_total / scene.d_total
    if dt > stiff_cap:
        raise StepSizeError(
            f"dt={dt}s exceeds the stability margin {stiff_cap:.4f}s "
            f"(H/D / 10)")
    if horizon < scene.td:
        raise FreqDynError("horizon must cover the PFR delivery time")
    n_steps = int(round(horizon / dt))
    if n_steps > MAX_KERNEL_STEPS:
        raise StepSizeError(
            f"{n_steps} steps exceed the kernel cap; increase dt")
    t = np.arange(n_steps + 1) * dt
    if scene.dpl == 0.0:
        z = np.zeros(n_steps + 1)
        return FrequencyTrace(t, z, z.copy(),
                              *_components(scene, t, z, z, np.zeros(n_steps + 1)))
    df, dfdt, detected, t_nadir, df_nadir, idx = _kernel.integrate(
        scene.h_total, scene.d_total, scene.pfr, scene.td,
        scene.dpl, scene.dpc, dt, n_steps, hold)
    pc = np.zeros(n_steps + 1)
    if detected and scene.dpc != 0.0:
        mask = (t >= t_nadir) & (t <= t_nadir + hold)
        pc[mask] = scene.dpc
    ramp, p_si, p_mpe, pc = _components(scene, t, df, dfdt, pc)
    return FrequencyTrace(t, df, dfdt, ramp, p_si, p_mpe, pc,
                          nadir_detected=detected, t_nadir=t_nadir,
                          df_nadir=df_nadir)


def _coarse_dt(scene, dt, horizon, cap=200_000):
    """Step size for long asymptote runs: at most `cap` steps, still stable."""
    out = max(dt, horizon / cap)
    return min(out, 0.05 * scene.h_total / scene.d_total)


# -- schedule certification ---------------------------------------------------

@dataclass
class CertEntry:
    period: int
    scenario: str
    dpl_eff: float
    h_total: float
    d_total: float
    pfr: float
    dpc: float
    vacuous: bool = False
    rocof: float = 0.0
    rocof_ok: bool = True
    nadir_closed: float = float("nan")
    closed_form_valid: bool = True
    nadir_sim: float = 0.0
    t_nadir_sim: float = float("nan")
    nadir_ok: bool = True
    ss_sim: float = 0.0
    ss_closed: float = 0.0
    ss_ok: bool = True
    ss_clamped: bool = False

    def passed(self):
        return self.rocof_ok and self.nadir_ok and self.ss_ok


@dataclass
class CertificationReport:
    rule: str
    limits: dict
    entries: list = field(default_factory=list)

    def all_pass(self):
        return all(e.passed() for e in self.entries)

    def nadir_values(self):
        return [e.nadir_sim for e in self.entries if not e.vacuous]

    def worst_margins(self):
        lim = self.limits
        out = {"nadir": math.inf, "rocof": math.inf, "steady_state": math.inf}
        for e in self.entries:
            if e.vacuous:
                continue
            out["nadir"] = min(out["nadir"], e.nadir_sim + lim["df_lim"])
            out["rocof"] = min(out["rocof"], lim["rocof_lim"] - abs(e.rocof))
            out["steady_state"] = min(out["steady_state"],
                                      e.ss_sim + lim["dfss_lim"])
        return out

    def worst_entry(self):
        live = [e for e in self.entries if not e.vacuous]
        if not live:
            return None
        return min(live, key=lambda e: e.nadir_sim)

    def to_text(self):
        lines = [f"certification report (disturbance rule: {self.rule})",
                 "limits: nadir >= -{df_lim} Hz, |rocof| <= {rocof_lim} Hz/s,"
                 " steady-state >= -{dfss_lim} Hz".format(**self.limits),
                 ""]
        hdr = (f"{'t':>4} {'s':>8} {'dPL_eff':>9} {'H':>8} {'R':>7} "
               f"{'rocof':>8} {'nadir_sim':>10} {'ss_sim':>8}  result")
        lines.append(hdr)
        for e in self.entries:
            if e.vacuous:
                lines.append(f"{e.period:>4} {e.scenario:>8} {e.dpl_eff:>9.3f}"
                             f" {'-':>8} {'-':>7} {'-':>8} {'-':>10} {'-':>8}"
                             f"  pass (no disturbance)")
                continue
            tag = "pass" if e.passed() else "FAIL"
            if e.ss_clamped:
                tag += " [ss>0 clamped]"
            lines.append(
                f"{e.period:>4} {e.scenario:>8} {e.dpl_eff:>9.3f}"
                f" {e.h_total:>8.2f} {e.pfr:>7.2f} {e.rocof:>8.4f}"
                f" {e.nadir_sim:>10.4f} {e.ss_sim:>8.4f}  {tag}")
        w = self.worst_margins()
        lines.append("")
        lines.append(f"entries: {len(self.entries)}  all_pass: {self.all_pass()}")
        if any(not e.vacuous for e in self.entries):
            lines.append(
                "worst margins: nadir {nadir:+.4f} Hz, rocof {rocof:+.4f} Hz/s,"
                " steady-state {steady_state:+.4f} Hz".format(**w))
        return "\n".join(lines) + "\n"

    def table_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["period", "scenario", "dpl_eff_mw", "h_mws_per_hz",
                    "r_mw", "dpc_mw", "rocof_hzps", "nadir_closed_hz",
                    "nadir_sim_hz", "ss_sim_hz", "vacuous", "pass"])
        for e in self.entries:
            w.writerow([e.period, e.scenario, repr(e.dpl_eff),
                        repr(e.h_total), repr(e.pfr), repr(e.dpc),
                        repr(e.rocof), repr(e.nadir_closed),
                        repr(e.nadir_sim), repr(e.ss_sim),
                        int(e.vacuous), int(e.passed())])
        return buf.getvalue()


def certify(solution, case, scenarios, rule="robust", dt=1e-3,
            nadir_tol=0.0):
    """Check every (period, scenario) of a schedule by closed form + simulation.

    rule "robust" evaluates the disturbance at its distributionally robust
    shift (mean shortfall plus xi*sigma); "mean" uses the mean only.
    """
    from .drcc import xi  # local import to keep module layering one-way

    lim = case.frequency_limits
    xi_v = xi(solution.eta)
    report = CertificationReport(
        rule=rule,
        limits={"df_lim": lim.df_lim, "rocof_lim": lim.rocof_lim,
                "dfss_lim": lim.dfss_lim})
    for (t, s) in solution.keys():
        rec = solution.at(t, s)
        sigma = solution.alpha * rec["dpd_mu"]
        dpl_eff = rec["p_import"] - rec["dpd_mu"]
        if rule == "robust":
            dpl_eff += xi_v * sigma
        d0 = scenarios.damping_d0(case, t, s)
        scene = FrequencyScene(
            h_sg=rec["h_sg"], h_storage=rec["h_storage"],
            h_wind=tuple(rec["h_wind"]), d0=d0,
            gamma=tuple(case.wind_gammas()), pfr=rec["pfr"], td=lim.td,
            dpl=max(dpl_eff, 0.0), dpc=rec["dpc"])
        entry = CertEntry(period=t, scenario=s, dpl_eff=dpl_eff,
                          h_total=scene.h_total, d_total=scene.d_total,
                          pfr=scene.pfr, dpc=scene.dpc)
        if dpl_eff <= 0.0:
            entry.vacuous = True
            report.entries.append(entry)
            continue
        entry.rocof = rocof_max(scene)
        entry.rocof_ok = abs(entry.rocof) <= lim.rocof_lim + 1e-9
        t_n = nadir_time(scene) if scene.pfr > 0 else math.inf
        entry.closed_form_valid = t_n <= lim.td
        if entry.closed_form_valid:
            entry.nadir_closed = nadir(scene)
        horizon = lim.td * 1.2
        trace = simulate_swing(scene, dt, horizon)
        if not trace.nadir_detected:
            # declining past the ramp: run to quasi-steady state
            horizon = lim.td + 8.0 * 2.0 * scene.h_total / scene.d_total
            trace = simulate_swing(scene, _coarse_dt(scene, dt, horizon),
                                   horizon)
        entry.nadir_sim = float(trace.df_nadir) if trace.nadir_detected \
            else float(np.min(trace.df))
        entry.t_nadir_sim = float(trace.t_nadir)
        entry.nadir_ok = entry.nadir_sim >= -lim.df_lim - nadir_tol
        # steady state from the long-horizon asymptote (simulation side)
        tail = lim.td + 10.0 * 2.0 * scene.h_total / scene.d_total
        tail_trace = simulate_swing(scene, _coarse_dt(scene, dt, tail), tail)
        entry.ss_sim = float(tail_trace.df[-1])
        entry.ss_closed = steady_state(scene)
        entry.ss_clamped = entry.ss_sim > 0.0
        entry.ss_ok = entry.ss_sim >= -lim.dfss_lim - 1e-6
        report.entries.append(entry)
    return report
