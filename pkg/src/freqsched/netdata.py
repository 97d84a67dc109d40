"""Microgrid case and scenario ingestion.

The case lives in one JSON document (schema `netcase-v1`, documented in
docs/case-schema.md); scenario profiles live in a CSV keyed by
(scenario, period, entity, kind).  Everything is validated before any model
gets built, and loaded objects are immutable by convention afterwards.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

CASE_SCHEMA = "netcase-v1"
SCENARIO_KINDS = ("p_mw", "q_mvar", "wind_mw", "pv_mw", "hsw_max")


class CaseError(Exception):
    pass


class CaseFormatError(CaseError):
    """File does not parse against the documented schema."""


class CaseReferenceError(CaseError):
    """A unit points at an entity that does not exist."""


class CaseBoundError(CaseError):
    """A type invariant is violated."""


@dataclass(frozen=True)
class Bus:
    id: int
    vmin: float = 0.94          # p.u.
    vmax: float = 1.06
    shunt_b: float = 0.0        # p.u. susceptance


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    g: float                    # series admittance, p.u.
    b: float
    smax: float                 # MVA


@dataclass(frozen=True)
class SGUnit:
    id: str
    bus: int
    klass: str                  # "fast" or "slow"
    pmax: float                 # MW
    pmin: float
    qmin: float                 # MVAr
    qmax: float
    inertia: float              # H_g, s
    pfr_max: float              # MW deliverable as primary response
    pfr_ramp_share: float = 1.0  # share of headroom deliverable by td
    cost_startup: float = 0.0
    cost_run_fixed: float = 0.0   # fast units: per committed hour
    cost_run_energy: float = 0.0  # slow units: per MWh
    min_up: int = 1             # hours
    min_down: int = 1


@dataclass(frozen=True)
class StorageUnit:
    id: str
    bus: int
    pch_max: float              # MW, <= 0 (charging bound)
    pdch_max: float             # MW, >= 0
    energy: float               # MWh
    eff: float
    soc_min: float
    soc_max: float
    soc_init: float
    ts: float = 30.0            # constant-power window, s


@dataclass(frozen=True)
class WindUnit:
    id: str
    bus: int
    capacity: float             # MW
    gamma: float = 0.0          # damping penalty per (MWs/Hz)^2
    hsw_max: float = 0.0        # default per-period SI cap, MWs/Hz


@dataclass(frozen=True)
class PVUnit:
    id: str
    bus: int
    capacity: float
    storage_id: str = ""


@dataclass(frozen=True)
class LoadPoint:
    id: str
    bus: int
    rho: float = 0.3            # noncritical share available at islanding
    voll: float = 1000.0        # value of lost load


@dataclass(frozen=True)
class FrequencyLimits:
    df_lim: float = 0.8         # Hz
    dfss_lim: float = 0.5
    rocof_lim: float = 0.5      # Hz/s
    f0: float = 50.0
    td: float = 10.0            # s
    d0_kind: str = "demand_fraction"
    d0_value: float = 0.005     # MW/Hz per MW of demand, or constant MW/Hz


@dataclass(frozen=True)
class PCC:
    bus: int
    smax: float                 # MVA interchange rating


@dataclass
class NetworkCase:
    name: str
    frequency_limits: FrequencyLimits
    pcc: PCC
    sbase: float = 100.0
    buses: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    sg_units: list = field(default_factory=list)
    storage_units: list = field(default_factory=list)
    wind_units: list = field(default_factory=list)
    pv_units: list = field(default_factory=list)
    loads: list = field(default_factory=list)

    def bus_ids(self):
        return {b.id for b in self.buses}

    def wind_gammas(self):
        return [w.gamma for w in self.wind_units]

    def all_unit_ids(self):
        return [u.id for group in (self.sg_units, self.storage_units,
                                   self.wind_units, self.pv_units, self.loads)
                for u in group]


def validate_case(case):
    """Diagnostics for every violated invariant or dangling reference.

    Returns a list of strings; empty means the case is sound.
    """
    out = []
    buses = case.bus_ids()
    if len(buses) != len(case.buses):
        out.append("buses: duplicate bus ids")
    for b in case.buses:
        if not 0 < b.vmin < b.vmax:
            out.append(f"bus {b.id}: voltage bounds must satisfy 0 < vmin < vmax")
    for i, br in enumerate(case.branches):
        if br.smax <= 0:
            out.append(f"branch {br.from_bus}-{br.to_bus}: smax must be > 0")
        for end in (br.from_bus, br.to_bus):
            if end not in buses:
                out.append(f"branch {i}: endpoint bus {end} not in bus set")
    ids = case.all_unit_ids()
    if len(ids) != len(set(ids)):
        out.append("units: duplicate unit ids")
    for g in case.sg_units:
        if g.bus not in buses:
            out.append(f"sg {g.id}: bus {g.bus} not in bus set")
        if g.klass not in ("fast", "slow"):
            out.append(f"sg {g.id}: class must be fast or slow")
        if g.pmin > g.pmax:
            out.append(f"sg {g.id}: pmin > pmax")
        if g.inertia < 0:
            out.append(f"sg {g.id}: inertia must be >= 0")
        if min(g.cost_startup, g.cost_run_fixed, g.cost_run_energy) < 0:
            out.append(f"sg {g.id}: costs must be >= 0")
        if g.pfr_max < 0 or not 0 <= g.pfr_ramp_share <= 1:
            out.append(f"sg {g.id}: pfr fields out of range")
        if g.min_up < 1 or g.min_down < 1:
            out.append(f"sg {g.id}: min up/down times must be >= 1 hour")
    for b in case.storage_units:
        if b.bus not in buses:
            out.append(f"storage {b.id}: bus {b.bus} not in bus set")
        if not b.pch_max <= 0 <= b.pdch_max:
            out.append(f"storage {b.id}: need pch_max <= 0 <= pdch_max")
        if not (0 <= b.soc_min < b.soc_max <= 1):
            out.append(f"storage {b.id}: need 0 <= soc_min < soc_max <= 1")
        if not b.soc_min <= b.soc_init <= b.soc_max:
            out.append(f"storage {b.id}: initial SoC outside [soc_min, soc_max]")
        if not 0 < b.eff <= 1:
            out.append(f"storage {b.id}: efficiency must be in (0, 1]")
        if b.energy <= 0:
            out.append(f"storage {b.id}: energy capacity must be > 0")
        if b.ts < 0:
            out.append(f"storage {b.id}: constant-power window must be >= 0")
    for w in case.wind_units:
        if w.bus not in buses:
            out.append(f"wind {w.id}: bus {w.bus} not in bus set")
        if w.gamma < 0 or w.hsw_max < 0 or w.capacity < 0:
            out.append(f"wind {w.id}: capacity, gamma, hsw_max must be >= 0")
    storage_ids = {b.id for b in case.storage_units}
    for m in case.pv_units:
        if m.bus not in buses:
            out.append(f"pv {m.id}: bus {m.bus} not in bus set")
        if m.capacity < 0:
            out.append(f"pv {m.id}: capacity must be >= 0")
        if m.storage_id and m.storage_id not in storage_ids:
            out.append(f"pv {m.id}: attached storage {m.storage_id} unknown")
    for l in case.loads:
        if l.bus not in buses:
            out.append(f"load {l.id}: bus {l.bus} not in bus set")
        if not 0 <= l.rho <= 1:
            out.append(f"load {l.id}: noncritical share rho must be in [0,1]")
        if l.voll < 0:
            out.append(f"load {l.id}: VOLL must be >= 0")
    lim = case.frequency_limits
    if min(lim.df_lim, lim.dfss_lim, lim.rocof_lim, lim.f0, lim.td,
           lim.d0_value) <= 0:
        out.append("frequency limits: all fields must be strictly positive")
    if lim.dfss_lim > lim.df_lim:
        out.append("frequency limits: steady-state limit must not exceed the"
                   " nadir limit")
    if lim.d0_kind not in ("demand_fraction", "constant"):
        out.append("frequency limits: d0 rule must be demand_fraction or"
                   " constant")
    if case.pcc.bus not in buses:
        out.append(f"pcc: bus {case.pcc.bus} not in bus set")
    if case.pcc.smax < 0:
        out.append("pcc: interchange rating must be >= 0")
    if case.sbase <= 0:
        out.append("sbase must be > 0")
    return out


def case_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("schema") != CASE_SCHEMA:
        raise CaseFormatError(f"expected schema {CASE_SCHEMA!r}, "
                              f"got {doc.get('schema')!r}")
    try:
        lim = FrequencyLimits(**doc["frequency_limits"])
        case = NetworkCase(
            name=doc.get("name", "case"),
            frequency_limits=lim,
            pcc=PCC(**doc["pcc"]),
            sbase=float(doc.get("sbase", 100.0)),
            buses=[Bus(**d) for d in doc.get("buses", [])],
            branches=[Branch(**d) for d in doc.get("branches", [])],
            sg_units=[SGUnit(**d) for d in doc.get("sg_units", [])],
            storage_units=[StorageUnit(**d) for d in doc.get("storage_units", [])],
            wind_units=[WindUnit(**d) for d in doc.get("wind_units", [])],
            pv_units=[PVUnit(**d) for d in doc.get("pv_units", [])],
            loads=[LoadPoint(**d) for d in doc.get("loads", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CaseFormatError(f"malformed case document: {exc}") from exc
    return case


def case_to_dict(case):
    return {
        "schema": CASE_SCHEMA,
        "name": case.name,
        "sbase": case.sbase,
        "frequency_limits": asdict(case.frequency_limits),
        "pcc": asdict(case.pcc),
        "buses": [asdict(b) for b in case.buses],
        "branches": [asdict(b) for b in case.branches],
        "sg_units": [asdict(g) for g in case.sg_units],
        "storage_units": [asdict(b) for b in case.storage_units],
        "wind_units": [asdict(w) for w in case.wind_units],
        "pv_units": [asdict(m) for m in case.pv_units],
        "loads": [asdict(l) for l in case.loads],
    }


def serialize_case(case):
    return json.dumps(case_to_dict(case), indent=2, sort_keys=False) + "\n"


def load_case(path):
    """Parse, cross-reference and bound-check a case file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CaseFormatError(f"cannot parse {path}: {exc}") from exc
    case = case_from_dict(doc)
    diags = validate_case(case)
    refs = [d for d in diags if "not in bus set" in d or "unknown" in d
            or "duplicate" in d]
    if refs:
        raise CaseReferenceError("; ".join(refs))
    if diags:
        raise CaseBoundError("; ".join(diags))
    return case


# -- scenarios ----------------------------------------------------------------

@dataclass
class ScenarioSet:
    scenarios: list                      # scenario ids, file order
    probabilities: dict                  # id -> pi_s
    periods: list                        # 1..T
    dt_h: float
    values: dict                         # (scenario, period, entity, kind) -> value

    def value(self, s, t, entity, kind, default=None):
        key = (s, t, entity, kind)
        if key in self.values:
            return self.values[key]
        if default is None:
            raise CaseError(f"scenario value missing: {key}")
        return default

    def demand_p(self, s, t, load_id):
        return self.value(s, t, load_id, "p_mw")

    def demand_q(self, s, t, load_id):
        return self.value(s, t, load_id, "q_mvar", default=0.0)

    def wind_avail(self, s, t, unit_id):
        return self.value(s, t, unit_id, "wind_mw")

    def pv_avail(self, s, t, unit_id):
        return self.value(s, t, unit_id, "pv_mw")

    def hsw_max(self, s, t, unit, default):
        return self.value(s, t, unit, "hsw_max", default=default)

    def total_demand(self, case, t, s):
        return sum(self.demand_p(s, t, l.id) for l in case.loads)

    def damping_d0(self, case, t, s):
        lim = case.frequency_limits
        if lim.d0_kind == "constant":
            return lim.d0_value
        return lim.d0_value * self.total_demand(case, t, s)


def load_scenarios(path, case):
    """Read the scenarios CSV and check it against the case."""
    path = Path(path)
    probs = {}
    dt_h = 1.0
    values = {}
    periods = set()
    scenarios = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [c.strip() for c in header] != \
                    ["scenario", "period", "entity", "kind", "value"]:
                raise CaseFormatError(
                    f"bad scenario header {header!r}; expected "
                    f"scenario,period,entity,kind,value")
            for ln, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                s, t, entity, kind, value = [c.strip() for c in row]
                t = int(t)
                value = float(value)
                if kind == "prob":
                    probs[s] = value
                    if s not in scenarios:
                        scenarios.append(s)
                elif kind == "dt_h":
                    dt_h = value
                elif kind in SCENARIO_KINDS:
                    if t < 1:
                        raise CaseFormatError(
                            f"line {ln}: period must be >= 1 for {kind}")
                    periods.add(t)
                    values[(s, t, entity, kind)] = value
                else:
                    raise CaseFormatError(f"line {ln}: unknown kind {kind!r}")
    except (OSError, ValueError) as exc:
        if isinstance(exc, CaseError):
            raise
        raise CaseFormatError(f"cannot parse {path}: {exc}") from exc

    if not probs:
        raise CaseFormatError("no scenario probability rows found")
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-9:
        raise CaseBoundError(
            f"scenario probabilities sum to {total!r}, expected 1")
    if not periods:
        raise CaseFormatError("no profile rows found")
    T = max(periods)
    if periods != set(range(1, T + 1)):
        raise CaseBoundError("profile periods must cover 1..T without gaps")
    ss = ScenarioSet(scenarios=scenarios, probabilities=probs,
                     periods=list(range(1, T + 1)), dt_h=dt_h, values=values)

    # every load/wind/pv entity needs a complete profile; lengths must match
    for s in scenarios:
        for t in ss.periods:
            for l in case.loads:
                if (s, t, l.id, "p_mw") not in values:
                    raise CaseBoundError(
                        f"load {l.id} misses p_mw at ({s}, {t})")
            for w in case.wind_units:
                if (s, t, w.id, "wind_mw") not in values:
                    raise CaseBoundError(
                        f"wind {w.id} misses wind_mw at ({s}, {t})")
            for m in case.pv_units:
                if (s, t, m.id, "pv_mw") not in values:
                    raise CaseBoundError(
                        f"pv {m.id} misses pv_mw at ({s}, {t})")
    for key, v in values.items():
        if key[3] in ("wind_mw", "pv_mw", "hsw_max") and v < 0:
            raise CaseBoundError(f"negative availability at {key}")
    known = set(case.all_unit_ids())
    for key in values:
        if key[2] not in known:
            raise CaseReferenceError(f"profile entity {key[2]!r} unknown")
    return ss


def fixture_path(name):
    """Path to a shipped fixture (case or scenario file)."""
    return Path(resources.files("freqsched") / "fixtures" / name)
