"""Solver-agnostic mixed-integer second-order-cone program representation.

A ConicProgram holds a variable table, sparse linear rows, second-order /
rotated cones and a linear objective.  It can be checked against a candidate
point, exported to a canonical text format and re-parsed bit-exactly.
"""

from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "c"
BINARY = "b"

SENSE_LE = "<="
SENSE_GE = ">="
SENSE_EQ = "="

_FORMAT_HEADER = "freqsched-conic 1"


class ConicError(Exception):
    """Structural error while building or parsing a program."""


@dataclass
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass
class LinRow:
    coeffs: dict          # var index -> coefficient
    sense: str
    rhs: float
    name: str = ""


@dataclass
class Cone:
    kind: str             # "soc": ||u|| <= t   /  "rsoc": 2 p q >= ||u||^2
    vars: tuple           # soc: (t, u...)      /  rsoc: (p, q, u...)


@dataclass
class SolutionPoint:
    """Values for every variable plus solver status.

    status is one of: optimal, feasible, infeasible, unbounded, limit.
    """
    values: np.ndarray
    objective: float
    status: str
    dual_bound: float = float("nan")

    def value(self, handle):
        return float(self.values[handle])


@dataclass
class ResidualReport:
    max_bound: float = 0.0
    max_row: float = 0.0
    max_cone: float = 0.0
    max_integrality: float = 0.0
    worst_row: str = ""
    worst_cone: int = -1

    def max_violation(self):
        return max(self.max_bound, self.max_row, self.max_cone,
                   self.max_integrality)

    def clean(self, tol):
        return self.max_violation() <= tol


class ConicProgram:
    """Mixed-integer conic program in construction order.

    Variables, rows and cones keep their insertion order; handles are plain
    integer indices that stay valid for the program's lifetime.
    """

    def __init__(self, name="program"):
        self.name = name
        self.variables = []
        self.rows = []
        self.cones = []
        self.obj_coeffs = {}
        self.obj_const = 0.0
        self._names = {}

    # -- construction ------------------------------------------------------

    def add_variable(self, name, kind=CONTINUOUS, lb=-np.inf, ub=np.inf):
        if name in self._names:
            raise ConicError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ConicError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb = max(0.0, lb)
            ub = min(1.0, ub)
        if lb > ub:
            raise ConicError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        handle = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._names[name] = handle
        return handle

    def handle(self, name):
        return self._names[name]

    def has_variable(self, name):
        return name in self._names

    def _check_handles(self, handles):
        n = len(self.variables)
        for h in handles:
            if not (0 <= h < n):
                raise ConicError(f"variable handle {h} out of range")

    def add_row(self, coeffs, sense, rhs, name=""):
        if sense not in (SENSE_LE, SENSE_GE, SENSE_EQ):
            raise ConicError(f"unknown row sense {sense!r}")
        coeffs = {int(h): float(c) for h, c in coeffs.items() if c != 0.0}
        self._check_handles(coeffs)
        self.rows.append(LinRow(coeffs, sense, float(rhs), name))
        return len(self.rows) - 1

    def _no_binaries(self, handles, what):
        for h in handles:
            if self.variables[h].kind == BINARY:
                raise ConicError(
                    f"binary variable {self.variables[h].name!r} in {what}")

    def add_soc_cone(self, t, u):
        """Register ||u|| <= t."""
        handles = (int(t),) + tuple(int(v) for v in u)
        self._check_handles(handles)
        self._no_binaries(handles, "second-order cone")
        self.cones.append(Cone("soc", handles))
        return len(self.cones) - 1

    def add_rotated_cone(self, p, q, u):
        """Register 2 p q >= ||u||^2 with p, q >= 0.

        Internally the solver maps this onto a plain second-order cone
        (p+q, p-q, sqrt(2) u); the sqrt(2) rescaling is handled there,
        callers state the constraint in the 2pq form above.
        """
        handles = (int(p), int(q)) + tuple(int(v) for v in u)
        self._check_handles(handles)
        self._no_binaries(handles, "rotated cone")
        self.cones.append(Cone("rsoc", handles))
        return len(self.cones) - 1

    def add_objective_term(self, handle, coef):
        self._check_handles([int(handle)])
        self.obj_coeffs[int(handle)] = self.obj_coeffs.get(int(handle), 0.0) \
            + float(coef)

    def set_objective(self, coeffs, const=0.0):
        coeffs = {int(h): float(c) for h, c in coeffs.items()}
        self._check_handles(coeffs)
        self.obj_coeffs = coeffs
        self.obj_const = float(const)

    # -- queries -----------------------------------------------------------

    @property
    def num_variables(self):
        return len(self.variables)

    def binary_indices(self):
        return [i for i, v in enumerate(self.variables) if v.kind == BINARY]

    def bounds_arrays(self):
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        return lb, ub

    def objective_value(self, values):
        return self.obj_const + sum(c * values[h]
                                    for h, c in self.obj_coeffs.items())

    def counts(self):
        return {
            "variables": len(self.variables),
            "binaries": len(self.binary_indices()),
            "rows": len(self.rows),
            "cones": len(self.cones),
        }

    # -- residual checking ---------------------------------------------------

    def check_point(self, point, tol=1e-6):
        """Max violation per bound / row / cone / integrality for a point.

        `point` is a SolutionPoint or an array covering every variable.
        """
        x = point.values if isinstance(point, SolutionPoint) else np.asarray(point)
        if x.shape[0] != len(self.variables):
            raise ConicError("point does not cover all variables")
        rep = ResidualReport()
        for i, v in enumerate(self.variables):
            rep.max_bound = max(rep.max_bound, v.lb - x[i], x[i] - v.ub)
            if v.kind == BINARY:
                rep.max_integrality = max(rep.max_integrality,
                                          abs(x[i] - round(x[i])))
        for row in self.rows:
            a = sum(c * x[h] for h, c in row.coeffs.items())
            if row.sense == SENSE_LE:
                viol = a - row.rhs
            elif row.sense == SENSE_GE:
                viol = row.rhs - a
            else:
                viol = abs(a - row.rhs)
            if viol > rep.max_row:
                rep.max_row = viol
                rep.worst_row = row.name
        for ci, cone in enumerate(self.cones):
            if cone.kind == "soc":
                t, u = x[cone.vars[0]], x[list(cone.vars[1:])]
                viol = float(np.linalg.norm(u) - t)
            else:
                p, q = x[cone.vars[0]], x[cone.vars[1]]
                u = x[list(cone.vars[2:])]
                viol = max(float(np.dot(u, u) - 2.0 * p * q), -p, -q)
            if viol > rep.max_cone:
                rep.max_cone = viol
                rep.worst_cone = ci
        return rep

    # -- canonical text form -------------------------------------------------

    def export_text(self):
        """Deterministic text form; insertion order, shortest-roundtrip floats."""
        out = [_FORMAT_HEADER, f"name {self.name}"]
        out.append(f"vars {len(self.variables)}")
        for v in self.variables:
            out.append(f"v {v.name} {v.kind} {_fmt(v.lb)} {_fmt(v.ub)}")
        out.append(f"rows {len(self.rows)}")
        for r in self.rows:
            terms = " ".join(f"{h}:{_fmt(c)}" for h, c in sorted(r.coeffs.items()))
            tag = r.name if r.name else "-"
            out.append(f"r {tag} {r.sense} {_fmt(r.rhs)} {len(r.coeffs)} {terms}".rstrip())
        out.append(f"cones {len(self.cones)}")
        for c in self.cones:
            out.append(f"{c.kind} " + " ".join(str(h) for h in c.vars))
        terms = " ".join(f"{h}:{_fmt(c)}"
                         for h, c in sorted(self.obj_coeffs.items()))
        out.append(f"min {len(self.obj_coeffs)} {terms}".rstrip()
                   + f" const {_fmt(self.obj_const)}")
        out.append("end")
        return "\n".join(out) + "\n"


def _fmt(x):
    x = float(x)
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return repr(x)


def _parse_float(tok):
    return float(tok)


def parse_text(text):
    """Parse the canonical export back into a ConicProgram."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _FORMAT_HEADER:
        raise ConicError("bad or missing format header")
    pos = 1
    name = "program"
    if lines[pos].startswith("name "):
        name = lines[pos][5:]
        pos += 1
    prog = ConicProgram(name)
    if not lines[pos].startswith("vars "):
        raise ConicError("expected vars section")
    nv = int(lines[pos].split()[1])
    pos += 1
    for _ in range(nv):
        tok = lines[pos].split()
        if tok[0] != "v":
            raise ConicError(f"expected variable line, got {lines[pos]!r}")
        prog.add_variable(tok[1], tok[2], _parse_float(tok[3]),
                          _parse_float(tok[4]))
        pos += 1
    if not lines[pos].startswith("rows "):
        raise ConicError("expected rows section")
    nr = int(lines[pos].split()[1])
    pos += 1
    for _ in range(nr):
        tok = lines[pos].split()
        if tok[0] != "r":
            raise ConicError(f"expected row line, got {lines[pos]!r}")
        rname = "" if tok[1] == "-" else tok[1]
        sense, rhs, nnz = tok[2], _parse_float(tok[3]), int(tok[4])
        coeffs = {}
        for item in tok[5:5 + nnz]:
            h, c = item.split(":")
            coeffs[int(h)] = _parse_float(c)
        prog.add_row(coeffs, sense, rhs, rname)
        pos += 1
    if not lines[pos].startswith("cones "):
        raise ConicError("expected cones section")
    nc = int(lines[pos].split()[1])
    pos += 1
    for _ in range(nc):
        tok = lines[pos].split()
        if tok[0] == "soc":
            prog.add_soc_cone(int(tok[1]), [int(t) for t in tok[2:]])
        elif tok[0] == "rsoc":
            prog.add_rotated_cone(int(tok[1]), int(tok[2]),
                                  [int(t) for t in tok[3:]])
        else:
            raise ConicError(f"unknown cone kind {tok[0]!r}")
        pos += 1
    tok = lines[pos].split()
    if tok[0] != "min":
        raise ConicError("expected objective line")
    nnz = int(tok[1])
    coeffs = {}
    for item in tok[2:2 + nnz]:
        h, c = item.split(":")
        coeffs[int(h)] = _parse_float(c)
    if tok[2 + nnz] != "const":
        raise ConicError("expected objective constant")
    prog.set_objective(coeffs, _parse_float(tok[3 + nnz]))
    pos += 1
    if lines[pos] != "end":
        raise ConicError("missing end marker")
    return prog
