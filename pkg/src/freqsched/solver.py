"""Mixed-integer conic solving: branch-and-bound over the interior-point backend.

Node selection is best-bound, branching picks the most fractional binary with
a deterministic index tie-break.  Bound tightening (interval propagation over
the linear rows) runs at every node, which is what makes the big-M indicator
blocks of the nadir constraint resolve quickly.  An exhaustive enumeration
oracle over all binary assignments backs the correctness tests, and an
external-solver bridge shells out to any command that understands the
canonical text export.
"""

import heapq
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conic import BINARY, SENSE_EQ, SENSE_GE, SENSE_LE, SolutionPoint
from .ipm import IPMOptions, NumericalFailure, solve_continuous


class SolverError(Exception):
    pass


@dataclass
class SolveOptions:
    rel_gap: float = 1e-4
    abs_gap: float = 1e-9
    int_tol: float = 1e-6
    node_limit: int = 200000
    time_limit: float = 3600.0
    node_selection: str = "best_bound"
    branching: str = "most_fractional"
    deterministic: bool = True
    seed: int = 0
    ipm: IPMOptions = field(default_factory=IPMOptions)
    log: object = None           # callable(nodes, bound, incumbent) or None


@dataclass
class SearchStats:
    nodes: int = 0
    incumbent_updates: int = 0
    bound_trace: list = field(default_factory=list)   # (node index, global bound)
    gap: float = np.inf
    status: str = "unknown"
    wall_time: float = 0.0


@dataclass
class BackendContract:
    """Continuous backend capabilities plus the solve entry point."""
    name: str = "internal-ipm"
    supports_soc: bool = True
    supports_rotated: bool = True

    def solve(self, program, lb=None, ub=None, options=None):
        return solve_continuous(program, lb, ub, options)


# -- bound tightening --------------------------------------------------------

_PROP_EPS = 1e-9


def propagate_bounds(program, lb, ub, max_passes=8):
    """Interval-arithmetic domain propagation over the linear rows.

    Returns (lb, ub, feasible).  Binary domains collapse to a fixing as soon
    as a big-M row forces them, which resolves indicator blocks early.
    """
    lb = lb.copy()
    ub = ub.copy()
    binaries = set(program.binary_indices())
    rows = program.rows
    for _ in range(max_passes):
        changed = False
        for row in rows:
            senses = []
            if row.sense in (SENSE_LE, SENSE_EQ):
                senses.append((row.coeffs, row.rhs))
            if row.sense in (SENSE_GE, SENSE_EQ):
                senses.append(({h: -c for h, c in row.coeffs.items()}, -row.rhs))
            for coeffs, rhs in senses:
                # min activity of a'x <= rhs
                minact = 0.0
                unbounded = 0
                unb_var = -1
                for h, c in coeffs.items():
                    t = c * (lb[h] if c > 0 else ub[h])
                    if not np.isfinite(t):
                        unbounded += 1
                        unb_var = h
                    else:
                        minact += t
                if unbounded == 0 and minact > rhs + max(1e-6, abs(rhs)) * _PROP_EPS:
                    return lb, ub, False
                for h, c in coeffs.items():
                    if unbounded > 1 or (unbounded == 1 and h != unb_var):
                        continue
                    own = c * (lb[h] if c > 0 else ub[h])
                    rest = minact - (own if np.isfinite(own) else 0.0)
                    limit = (rhs - rest) / c
                    if c > 0:
                        newub = limit + max(1e-6, abs(limit)) * _PROP_EPS
                        if h in binaries and newub < 1.0 - 1e-6:
                            if newub < -1e-6:
                                return lb, ub, False
                            newub = 0.0
                        if newub < ub[h] - 1e-12:
                            ub[h] = newub
                            changed = True
                            if lb[h] > ub[h] + 1e-9:
                                return lb, ub, False
                    else:
                        newlb = limit - max(1e-6, abs(limit)) * _PROP_EPS
                        if h in binaries and newlb > 1e-6:
                            if newlb > 1.0 + 1e-6:
                                return lb, ub, False
                            newlb = 1.0
                        if newlb > lb[h] + 1e-12:
                            lb[h] = newlb
                            changed = True
                            if lb[h] > ub[h] + 1e-9:
                                return lb, ub, False
        for h in binaries:
            if lb[h] > 1e-6 and lb[h] < 1.0:
                lb[h] = 1.0
            if ub[h] < 1.0 - 1e-6 and ub[h] > 0.0:
                ub[h] = 0.0
            if lb[h] > ub[h] + 1e-9:
                return lb, ub, False
        if not changed:
            break
    return lb, ub, True


# -- continuous relaxation under fixings -------------------------------------

def solve_relaxation(program, fixings=None, options=None, backend=None):
    """Continuous optimum with binaries relaxed to [0,1] or fixed per `fixings`."""
    backend = backend or BackendContract()
    opt = options or SolveOptions()
    lb, ub = program.bounds_arrays()
    if fixings:
        for h, v in fixings.items():
            if isinstance(v, tuple):
                lb[h], ub[h] = v
            else:
                lb[h] = ub[h] = float(v)
    return backend.solve(program, lb, ub, opt.ipm)


def _fractionality(values, binaries, int_tol):
    out = []
    for h in binaries:
        f = abs(values[h] - round(values[h]))
        if f > int_tol:
            out.append((h, f))
    return out


def _is_integral(values, binaries, int_tol):
    return not _fractionality(values, binaries, int_tol)


# -- branch and bound ---------------------------------------------------------

def solve_misocp(program, options=None, backend=None):
    """Best-bound branch-and-bound.  Returns (SolutionPoint, SearchStats)."""
    opt = options or SolveOptions()
    backend = backend or BackendContract()
    binaries = program.binary_indices()
    stats = SearchStats()
    t0 = time.monotonic()

    lb0, ub0 = program.bounds_arrays()
    lb0, ub0, ok = propagate_bounds(program, lb0, ub0)
    if not ok:
        stats.status = "infeasible"
        return SolutionPoint(np.zeros(program.num_variables), np.nan,
                             "infeasible"), stats

    incumbent = None
    incumbent_obj = np.inf

    def node_solve(lb, ub):
        try:
            return backend.solve(program, lb, ub, opt.ipm)
        except NumericalFailure:
            tight = IPMOptions(**{**opt.ipm.__dict__})
            tight.regularization = opt.ipm.regularization * 100
            try:
                return backend.solve(program, lb, ub, tight)
            except NumericalFailure:
                return None

    root = node_solve(lb0, ub0)
    stats.nodes += 1
    if root is None:
        stats.status = "limit"
        return SolutionPoint(np.zeros(program.num_variables), np.nan,
                             "limit"), stats
    if root.status in ("infeasible", "unbounded"):
        stats.status = root.status
        return root, stats

    def try_incumbent(point):
        nonlocal incumbent, incumbent_obj
        if point.objective < incumbent_obj - 1e-12:
            incumbent = point
            incumbent_obj = point.objective
            stats.incumbent_updates += 1

    if _is_integral(root.values, binaries, opt.int_tol):
        try_incumbent(root)
        stats.status = "optimal"
        stats.gap = 0.0
        stats.bound_trace.append((stats.nodes, root.dual_bound))
        res = SolutionPoint(incumbent.values, incumbent.objective, "optimal",
                            dual_bound=root.dual_bound)
        stats.wall_time = time.monotonic() - t0
        return res, stats

    # root rounding heuristic
    rlb, rub = lb0.copy(), ub0.copy()
    for h in binaries:
        v = float(round(root.values[h]))
        rlb[h] = rub[h] = v
    rlb, rub, ok = propagate_bounds(program, rlb, rub)
    if ok:
        heur = node_solve(rlb, rub)
        if heur is not None and heur.status == "optimal" and \
                _is_integral(heur.values, binaries, opt.int_tol):
            try_incumbent(heur)

    counter = 0
    heap = [(root.dual_bound, counter, lb0, ub0, root)]
    global_bound = root.dual_bound
    stats.bound_trace.append((stats.nodes, global_bound))

    def current_gap():
        if incumbent is None:
            return np.inf
        return max(0.0, (incumbent_obj - global_bound)
                   / max(1.0, abs(incumbent_obj)))

    status = "limit"
    while heap:
        if stats.nodes >= opt.node_limit or \
                time.monotonic() - t0 > opt.time_limit:
            status = "limit"
            break
        bound, _, nlb, nub, point = heapq.heappop(heap)
        global_bound = min(bound, min((e[0] for e in heap), default=np.inf))
        if stats.bound_trace[-1][1] < global_bound:
            stats.bound_trace.append((stats.nodes, global_bound))
        if opt.log is not None:
            opt.log(stats.nodes, global_bound,
                    incumbent_obj if incumbent is not None else None)
        if incumbent is not None and \
                bound >= incumbent_obj - max(opt.abs_gap,
                                             opt.rel_gap * max(1.0, abs(incumbent_obj))):
            status = "optimal"
            break

        # branch
        if point is not None:
            frac = _fractionality(point.values, binaries, opt.int_tol)
            frac.sort(key=lambda t: (-min(t[1], 1 - t[1]), t[0]))
            branch_var = frac[0][0]
        else:
            free = [h for h in binaries if nlb[h] < nub[h]]
            if not free:
                continue
            branch_var = free[0]

        for v in (0.0, 1.0):
            clb, cub = nlb.copy(), nub.copy()
            clb[branch_var] = cub[branch_var] = v
            clb, cub, ok = propagate_bounds(program, clb, cub)
            if not ok:
                continue
            child = node_solve(clb, cub)
            stats.nodes += 1
            if child is None:
                # numerical failure: keep searching below with parent's bound
                heapq.heappush(heap, (bound, counter := counter + 1,
                                      clb, cub, None))
                continue
            if child.status == "infeasible":
                continue
            if child.status == "unbounded":
                stats.status = "unbounded"
                return child, stats
            cb = max(child.dual_bound, bound)   # bounds never regress downward
            if incumbent is not None and cb >= incumbent_obj - max(
                    opt.abs_gap, opt.rel_gap * max(1.0, abs(incumbent_obj))):
                continue
            if _is_integral(child.values, binaries, opt.int_tol):
                try_incumbent(SolutionPoint(child.values, child.objective,
                                            "optimal", dual_bound=cb))
                continue
            heapq.heappush(heap, (cb, counter := counter + 1, clb, cub, child))

    if not heap:
        global_bound = incumbent_obj if incumbent is not None else global_bound
        status = "optimal" if incumbent is not None else "infeasible"

    stats.gap = current_gap()
    stats.wall_time = time.monotonic() - t0
    if status == "optimal" and incumbent is None:
        status = "infeasible"
    stats.status = status
    if incumbent is None:
        if status == "infeasible":
            return SolutionPoint(np.zeros(program.num_variables), np.nan,
                                 "infeasible"), stats
        return SolutionPoint(np.zeros(program.num_variables), np.nan,
                             "limit"), stats
    final_status = "optimal" if status == "optimal" else "limit"
    res = SolutionPoint(incumbent.values, incumbent_obj, final_status,
                        dual_bound=global_bound)
    return res, stats


# -- exhaustive oracle --------------------------------------------------------

def enumerate_oracle(program, options=None, backend=None, max_binaries=12):
    """Exact optimum by trying every binary assignment (test oracle)."""
    opt = options or SolveOptions()
    backend = backend or BackendContract()
    binaries = program.binary_indices()
    if len(binaries) > max_binaries:
        raise SolverError(
            f"enumerate_oracle limited to {max_binaries} binaries, "
            f"got {len(binaries)}")
    lb0, ub0 = program.bounds_arrays()
    best = None
    for mask in range(2 ** len(binaries)):
        lb, ub = lb0.copy(), ub0.copy()
        for i, h in enumerate(binaries):
            v = float((mask >> i) & 1)
            if v < lb0[h] - 1e-9 or v > ub0[h] + 1e-9:
                lb = None
                break
            lb[h] = ub[h] = v
        if lb is None:
            continue
        lb, ub, ok = propagate_bounds(program, lb, ub)
        if not ok:
            continue
        try:
            point = backend.solve(program, lb, ub, opt.ipm)
        except NumericalFailure:
            continue
        if point.status != "optimal":
            continue
        if best is None or point.objective < best.objective:
            best = point
    if best is None:
        return SolutionPoint(np.zeros(program.num_variables), np.nan,
                             "infeasible")
    return SolutionPoint(best.values, best.objective, "optimal",
                         dual_bound=best.objective)


# -- external solver bridge ---------------------------------------------------

@dataclass
class ExternalBridge:
    """Run `command <program file> <solution file>` on the canonical export.

    The solution file format is one `status <word>` line, an optional
    `objective <float>` line, then one `<variable name>,<value>` line per
    variable.
    """
    command: str

    def solve(self, program, workdir=None):
        tmp = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="fsx_"))
        tmp.mkdir(parents=True, exist_ok=True)
        prog_file = tmp / "program.cone"
        sol_file = tmp / "solution.txt"
        prog_file.write_text(program.export_text())
        cmd = shlex.split(self.command) + [str(prog_file), str(sol_file)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise SolverError(
                f"external solver failed (exit {proc.returncode}): "
                f"{proc.stderr.strip()[:500]}")
        if not sol_file.exists():
            raise SolverError("external solver wrote no solution file")
        return parse_solution_file(sol_file.read_text(), program)


def parse_solution_file(text, program):
    status = None
    objective = np.nan
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("status "):
            status = line.split(None, 1)[1].strip()
        elif line.startswith("objective "):
            objective = float(line.split(None, 1)[1])
        else:
            name, _, val = line.partition(",")
            values[name.strip()] = float(val)
    if status is None:
        raise SolverError("solution file has no status line")
    if status not in ("optimal", "feasible", "infeasible", "unbounded", "limit"):
        raise SolverError(f"unknown status {status!r} in solution file")
    if status in ("infeasible", "unbounded"):
        return SolutionPoint(np.zeros(program.num_variables), np.nan, status)
    x = np.zeros(program.num_variables)
    for i, var in enumerate(program.variables):
        if var.name not in values:
            raise SolverError(f"solution file misses variable {var.name!r}")
        x[i] = values[var.name]
    if np.isnan(objective):
        objective = program.objective_value(x)
    return SolutionPoint(x, objective, status, dual_bound=objective)
