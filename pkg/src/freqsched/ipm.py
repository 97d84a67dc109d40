"""Primal-dual interior-point solver for linear + second-order cone programs.

Self-contained continuous backend used by the branch-and-bound driver.  The
program is converted to the standard form

    minimize    c'x
    subject to  A x = b
                G x + s = h,   s in K

with K a product of a nonnegative orthant and second-order cones (rotated
cones are mapped onto plain ones).  The homogeneous self-dual embedding is
solved with Nesterov-Todd scaling and a Mehrotra predictor-corrector, which
yields clean infeasibility/unboundedness certificates for node pruning.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .conic import BINARY, SENSE_EQ, SENSE_GE, SENSE_LE, SolutionPoint

SQRT2 = np.sqrt(2.0)


class NumericalFailure(Exception):
    """The interior-point iteration broke down on this problem."""


@dataclass
class IPMOptions:
    feastol: float = 1e-9
    abstol: float = 1e-9
    reltol: float = 1e-9
    max_iter: int = 200
    regularization: float = 1e-9
    step_frac: float = 0.98
    # accept a slightly less polished iterate instead of failing outright
    stall_tol: float = 1e-6


@dataclass
class ConeSpec:
    l: int = 0                      # nonnegative orthant dimension
    socs: list = field(default_factory=list)   # second-order cone dims

    @property
    def dim(self):
        return self.l + sum(self.socs)

    @property
    def degree(self):
        return self.l + len(self.socs)


@dataclass
class StandardForm:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    cone: ConeSpec


def build_standard_form(program, lb=None, ub=None):
    """Convert a ConicProgram (binaries relaxed to their bounds) to standard form.

    lb/ub override the program's variable bounds, which is how the
    branch-and-bound driver fixes binaries without copying the program.
    """
    n = program.num_variables
    plb, pub = program.bounds_arrays()
    if lb is not None:
        plb = np.asarray(lb, dtype=float)
    if ub is not None:
        pub = np.asarray(ub, dtype=float)
    if np.any(plb > pub + 1e-12):
        return None   # trivially infeasible box

    a_rows, a_vals, a_cols, b_vec = [], [], [], []
    g_rows, g_vals, g_cols, h_vec = [], [], [], []

    def add_a(coeffs, rhs):
        i = len(b_vec)
        for col, val in coeffs:
            a_rows.append(i)
            a_cols.append(col)
            a_vals.append(val)
        b_vec.append(rhs)

    def add_g(coeffs, rhs):
        i = len(h_vec)
        for col, val in coeffs:
            g_rows.append(i)
            g_cols.append(col)
            g_vals.append(val)
        h_vec.append(rhs)

    for row in program.rows:
        items = sorted(row.coeffs.items())
        if row.sense == SENSE_EQ:
            add_a(items, row.rhs)
        elif row.sense == SENSE_LE:
            add_g(items, row.rhs)
        else:  # >=  ->  -a'x <= -rhs
            add_g([(hh, -v) for hh, v in items], -row.rhs)

    for j in range(n):
        if plb[j] == pub[j]:
            add_a([(j, 1.0)], plb[j])
            continue
        if np.isfinite(pub[j]):
            add_g([(j, 1.0)], pub[j])
        if np.isfinite(plb[j]):
            add_g([(j, -1.0)], -plb[j])

    spec = ConeSpec(l=len(h_vec))

    for cone in program.cones:
        if cone.kind == "soc":
            dim = len(cone.vars)
            for v in cone.vars:
                add_g([(v, -1.0)], 0.0)
            spec.socs.append(dim)
        else:  # rsoc (p, q, u...) -> (p+q, p-q, sqrt2 u) in SOC
            p, q, u = cone.vars[0], cone.vars[1], cone.vars[2:]
            if p == q:
                add_g([(p, -2.0)], 0.0)
            else:
                add_g([(p, -1.0), (q, -1.0)], 0.0)
                add_g([(p, -1.0), (q, 1.0)], 0.0)
            if p == q:
                add_g([], 0.0)
            for v in u:
                add_g([(v, -SQRT2)], 0.0)
            spec.socs.append(2 + len(u))

    c = np.zeros(n)
    for hh, v in program.obj_coeffs.items():
        c[hh] += v

    A = sp.csr_matrix((a_vals, (a_rows, a_cols)), shape=(len(b_vec), n))
    G = sp.csr_matrix((g_vals, (g_rows, g_cols)), shape=(len(h_vec), n))
    return StandardForm(c, A, np.array(b_vec, dtype=float),
                        G, np.array(h_vec, dtype=float), spec)


# -- cone algebra -----------------------------------------------------------
#
# SOC blocks are processed in groups of equal dimension so every operation is
# a handful of vectorized numpy calls instead of a Python loop over cones.

def _soc_blocks(spec):
    off = spec.l
    for d in spec.socs:
        yield off, d
        off += d


class ConeOps:
    """Vectorized algebra over an orthant x SOC product cone."""

    def __init__(self, spec):
        self.spec = spec
        self.l = spec.l
        self.dim = spec.dim
        groups = {}
        for off, d in _soc_blocks(spec):
            groups.setdefault(d, []).append(off)
        self.groups = []
        for d in sorted(groups):
            offs = np.array(groups[d], dtype=np.intp)
            idx = offs[:, None] + np.arange(d)[None, :]
            self.groups.append((d, idx))

    def block_order(self):
        """(dim, offset) pairs in the grouped order used by w2_values."""
        out = []
        for d, idx in self.groups:
            for r in range(idx.shape[0]):
                out.append((d, int(idx[r, 0])))
        return out

    def identity(self):
        e = np.zeros(self.dim)
        e[:self.l] = 1.0
        for d, idx in self.groups:
            e[idx[:, 0]] = 1.0
        return e

    def in_interior(self, v, margin=0.0):
        if self.l and np.any(v[:self.l] <= margin):
            return False
        for d, idx in self.groups:
            V = v[idx]
            det = V[:, 0] ** 2 - np.sum(V[:, 1:] ** 2, axis=1)
            if np.any(V[:, 0] <= margin) or np.any(det <= margin):
                return False
        return True

    def jordan_product(self, u, v):
        out = np.empty_like(u)
        out[:self.l] = u[:self.l] * v[:self.l]
        for d, idx in self.groups:
            U, V = u[idx], v[idx]
            out[idx[:, 0]] = np.sum(U * V, axis=1)
            out[idx[:, 1:]] = U[:, :1] * V[:, 1:] + V[:, :1] * U[:, 1:]
        return out

    def jordan_solve(self, lmbda, v):
        out = np.empty_like(v)
        out[:self.l] = v[:self.l] / lmbda[:self.l]
        for d, idx in self.groups:
            L, V = lmbda[idx], v[idx]
            det = L[:, 0] ** 2 - np.sum(L[:, 1:] ** 2, axis=1)
            if np.any(det <= 0) or np.any(L[:, 0] <= 0):
                raise NumericalFailure("singular scaled point in jordan_solve")
            x0 = (L[:, 0] * V[:, 0] - np.sum(L[:, 1:] * V[:, 1:], axis=1)) / det
            out[idx[:, 0]] = x0
            out[idx[:, 1:]] = (V[:, 1:] - x0[:, None] * L[:, 1:]) / L[:, :1]
        return out

    def max_step(self, u, du):
        """Largest alpha with u + alpha du staying in the (closed) cone."""
        alpha = np.inf
        if self.l:
            neg = du[:self.l] < 0
            if np.any(neg):
                alpha = min(alpha, np.min(-u[:self.l][neg] / du[:self.l][neg]))
        for d, idx in self.groups:
            U, D = u[idx], du[idx]
            a2 = D[:, 0] ** 2 - np.sum(D[:, 1:] ** 2, axis=1)
            a1 = 2.0 * (U[:, 0] * D[:, 0] - np.sum(U[:, 1:] * D[:, 1:], axis=1))
            a0 = np.maximum(U[:, 0] ** 2 - np.sum(U[:, 1:] ** 2, axis=1), 0.0)
            # det(u + a du) = a2 a^2 + a1 a + a0, a0 >= 0 inside the cone
            live = ~((a2 >= 0) & (a1 >= 0))
            if not np.any(live):
                continue
            a2, a1, a0 = a2[live], a1[live], a0[live]
            lin = a2 == 0.0
            if np.any(lin & (a1 < 0)):
                alpha = min(alpha, np.min(-a0[lin & (a1 < 0)]
                                          / a1[lin & (a1 < 0)]))
            quad = ~lin
            if np.any(quad):
                a2q, a1q, a0q = a2[quad], a1[quad], a0[quad]
                disc = a1q * a1q - 4 * a2q * a0q
                ok = disc >= 0
                if np.any(ok):
                    sq = np.sqrt(disc[ok])
                    r1 = (-a1q[ok] - sq) / (2 * a2q[ok])
                    r2 = (-a1q[ok] + sq) / (2 * a2q[ok])
                    roots = np.concatenate([r1, r2])
                    roots = roots[roots > 0]
                    if roots.size:
                        alpha = min(alpha, float(np.min(roots)))
        return alpha


class NTScaling:
    """Nesterov-Todd scaling for an orthant x SOC product cone."""

    def __init__(self, ops, s, z):
        self.ops = ops
        l = ops.l
        if l and (np.any(s[:l] <= 0) or np.any(z[:l] <= 0)):
            raise NumericalFailure("iterate left the orthant interior")
        self.w_orth = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.soc = []
        for d, idx in ops.groups:
            S, Z = s[idx], z[idx]
            det_s = S[:, 0] ** 2 - np.sum(S[:, 1:] ** 2, axis=1)
            det_z = Z[:, 0] ** 2 - np.sum(Z[:, 1:] ** 2, axis=1)
            if np.any(det_s <= 0) or np.any(det_z <= 0) or \
                    np.any(S[:, 0] <= 0) or np.any(Z[:, 0] <= 0):
                raise NumericalFailure("iterate left the cone interior")
            sres, zres = np.sqrt(det_s), np.sqrt(det_z)
            sbar, zbar = S / sres[:, None], Z / zres[:, None]
            gamma = np.sqrt((1.0 + np.sum(sbar * zbar, axis=1)) / 2.0)
            wbar = np.empty_like(S)
            wbar[:, 0] = (sbar[:, 0] + zbar[:, 0]) / (2 * gamma)
            wbar[:, 1:] = (sbar[:, 1:] - zbar[:, 1:]) / (2 * gamma[:, None])
            eta = np.sqrt(sres / zres)
            self.soc.append((idx, eta, wbar))
        self.lmbda = self.apply_W(z)

    def apply_W(self, v):
        out = np.empty_like(v)
        l = self.ops.l
        out[:l] = self.w_orth * v[:l]
        for idx, eta, wbar in self.soc:
            V = v[idx]
            w1v1 = np.sum(wbar[:, 1:] * V[:, 1:], axis=1)
            out[idx[:, 0]] = eta * (wbar[:, 0] * V[:, 0] + w1v1)
            coef = (w1v1 / (1.0 + wbar[:, 0]))[:, None]
            out[idx[:, 1:]] = eta[:, None] * (
                V[:, :1] * wbar[:, 1:] + V[:, 1:] + coef * wbar[:, 1:])
        return out

    def apply_Winv(self, v):
        out = np.empty_like(v)
        l = self.ops.l
        out[:l] = v[:l] / self.w_orth
        for idx, eta, wbar in self.soc:
            V = v[idx]
            w1v1 = np.sum(wbar[:, 1:] * V[:, 1:], axis=1)
            out[idx[:, 0]] = (wbar[:, 0] * V[:, 0] - w1v1) / eta
            coef = (w1v1 / (1.0 + wbar[:, 0]))[:, None]
            out[idx[:, 1:]] = (
                -V[:, :1] * wbar[:, 1:] + V[:, 1:] + coef * wbar[:, 1:]
            ) / eta[:, None]
        return out

    def w2_values(self):
        """W^2 entries in the KKT pattern order: orthant diagonal, then
        row-major dense entries per SOC block in grouped order."""
        parts = [self.w_orth ** 2]
        for idx, eta, wbar in self.soc:
            nb, d = wbar.shape
            # eta^2 (2 wbar wbar' - J), J = diag(1, -1, ..., -1)
            blk = 2.0 * np.einsum("bi,bj->bij", wbar, wbar)
            rng = np.arange(d)
            blk[:, rng, rng] += 1.0
            blk[:, 0, 0] -= 2.0
            parts.append((eta * eta)[:, None] * blk.reshape(nb, d * d))
        return np.concatenate([p.reshape(-1) for p in parts]) \
            if parts else np.zeros(0)


# -- homogeneous self-dual solver ------------------------------------------

@dataclass
class IPMResult:
    status: str                     # optimal / infeasible / unbounded / max_iter
    x: np.ndarray = None
    pcost: float = np.nan
    dcost: float = np.nan
    iterations: int = 0


class _KKT:
    """Quasi-definite KKT system with a fixed sparsity pattern.

    The A/G/regularization entries are laid down once; each factorization
    only refills the W^2 block values, which keeps the per-iteration cost in
    the sparse LU instead of matrix assembly.
    """

    def __init__(self, form, delta, ops):
        self.form = form
        self.delta = delta
        n = self.n = form.c.shape[0]
        p = self.p = form.b.shape[0]
        m = self.m = form.h.shape[0]
        self.dim = n + p + m

        A = form.A.tocoo()
        G = form.G.tocoo()
        rows = [np.arange(n),
                A.row + n, A.col,
                G.row + n + p, G.col,
                np.arange(n, n + p),
                np.arange(n + p, n + p + m)]
        cols = [np.arange(n),
                A.col, A.row + n,
                G.col, G.row + n + p,
                np.arange(n, n + p),
                np.arange(n + p, n + p + m)]
        vals = [np.full(n, delta),
                A.data, A.data,
                G.data, G.data,
                np.full(p, -delta),
                np.full(m, -delta)]

        # W^2 pattern: orthant diagonal, then dense blocks in grouped order
        w2_rows = [np.arange(ops.l)]
        w2_cols = [np.arange(ops.l)]
        for d, idx in ops.groups:
            offs = idx[:, 0]
            rng = np.arange(d)
            br = (offs[:, None, None] + rng[None, :, None]
                  + np.zeros((1, 1, d), dtype=np.intp)).reshape(-1)
            bc = (offs[:, None, None] + np.zeros((1, d, 1), dtype=np.intp)
                  + rng[None, None, :]).reshape(-1)
            w2_rows.append(br)
            w2_cols.append(bc)
        self._w2_rows = np.concatenate(w2_rows)
        self._w2_cols = np.concatenate(w2_cols)
        self._rows = np.concatenate(rows + [self._w2_rows + n + p])
        self._cols = np.concatenate(cols + [self._w2_cols + n + p])
        self._static_vals = np.concatenate(vals)

    def factor(self, scaling):
        w2 = scaling.w2_values()
        vals = np.concatenate([self._static_vals, -w2])
        K = sp.csc_matrix((vals, (self._rows, self._cols)),
                          shape=(self.dim, self.dim))
        self.W2 = sp.csc_matrix((w2, (self._w2_rows, self._w2_cols)),
                                shape=(self.m, self.m))
        try:
            self.lu = splu(K)
        except RuntimeError as exc:
            raise NumericalFailure(f"KKT factorization failed: {exc}")

    def solve(self, rx, ry, rz, refine=2):
        n, p = self.n, self.p
        rhs = np.concatenate([rx, ry, rz]) if p else np.concatenate([rx, rz])
        u = self.lu.solve(rhs)
        for _ in range(refine):
            res = rhs - self._apply_unregularized(u)
            if np.max(np.abs(res)) <= 1e-11 * (1.0 + np.max(np.abs(rhs))):
                break
            u = u + self.lu.solve(res)
        if p:
            return u[:n], u[n:n + p], u[n + p:]
        return u[:n], np.zeros(0), u[n:]

    def _apply_unregularized(self, u):
        n, p = self.n, self.p
        x = u[:n]
        y = u[n:n + p] if p else np.zeros(0)
        z = u[n + p:] if p else u[n:]
        top = self.form.A.T @ y + self.form.G.T @ z if p else self.form.G.T @ z
        mid = self.form.A @ x if p else np.zeros(0)
        bot = self.form.G @ x - self.W2 @ z
        if p:
            return np.concatenate([top, mid, bot])
        return np.concatenate([top, bot])


def solve_standard_form(form, options=None):
    """Run the homogeneous self-dual interior-point iteration."""
    opt = options or IPMOptions()
    n, p, m = form.c.shape[0], form.b.shape[0], form.h.shape[0]
    spec = form.cone

    if m == 0 and p == 0:
        if np.all(form.c == 0):
            return IPMResult("optimal", np.zeros(n), 0.0, 0.0, 0)
        return IPMResult("unbounded", np.zeros(n))

    theta_p = max(1.0, np.max(np.abs(form.b)) if p else 0.0,
                  np.max(np.abs(form.h)) if m else 0.0)
    theta_d = max(1.0, np.max(np.abs(form.c)))
    c = form.c / theta_d
    b = form.b / theta_p
    h = form.h / theta_p

    ops = ConeOps(spec)
    e = ops.identity()
    x = np.zeros(n)
    y = np.zeros(p)
    z = e.copy()
    s = e.copy()
    tau, kappa = 1.0, 1.0
    nu = spec.degree + 1

    kkt = _KKT(StandardForm(c, form.A, b, form.G, h, spec),
               opt.regularization, ops)

    def residuals():
        r1 = form.A.T @ y + form.G.T @ z + c * tau if p else form.G.T @ z + c * tau
        r2 = -form.A @ x + b * tau if p else np.zeros(0)
        r3 = -form.G @ x + h * tau - s
        r4 = -(c @ x) - (b @ y if p else 0.0) - h @ z - kappa
        return r1, r2, r3, r4

    best = None     # (score, x-hat, pcost, dcost, iteration)
    for it in range(opt.max_iter):
        r1, r2, r3, r4 = residuals()
        mu = (s @ z + tau * kappa) / nu

        # convergence on tau-normalized iterate
        xt, yt, zt, st = x / tau, y / tau, z / tau, s / tau
        pres = 0.0
        if p:
            pres = np.max(np.abs(form.A @ xt - b)) / (1 + np.max(np.abs(b)))
        pres = max(pres, np.max(np.abs(form.G @ xt + st - h)) / (1 + np.max(np.abs(h))))
        dres_v = form.A.T @ yt + form.G.T @ zt + c if p else form.G.T @ zt + c
        dres = np.max(np.abs(dres_v)) / (1 + np.max(np.abs(c)))
        pcost = c @ xt
        dcost = -(b @ yt if p else 0.0) - h @ zt
        gap = s @ z / tau ** 2
        relgap = abs(pcost - dcost) / max(1.0, abs(pcost), abs(dcost))
        score = max(pres, dres, min(gap, relgap))
        if best is None or score < best[0]:
            best = (score, xt * theta_p, pcost, dcost, it)
        if pres <= opt.feastol and dres <= opt.feastol and \
                (gap <= opt.abstol or relgap <= opt.reltol):
            scale = theta_p * theta_d
            return IPMResult("optimal", xt * theta_p,
                             pcost * scale, dcost * scale, it)

        # infeasibility certificates
        by_hz = (b @ y if p else 0.0) + h @ z
        if by_hz < -1e-12:
            cert = np.max(np.abs(form.A.T @ y + form.G.T @ z)) if p else \
                np.max(np.abs(form.G.T @ z))
            if cert / (-by_hz) <= opt.feastol * 0.1 and tau <= 1e-6 * max(1.0, kappa):
                return IPMResult("infeasible", iterations=it)
        cx = c @ x
        if cx < -1e-12:
            ray = max(np.max(np.abs(form.A @ x)) if p else 0.0,
                      np.max(np.abs(form.G @ x + s)))
            if ray / (-cx) <= opt.feastol * 0.1 and tau <= 1e-6 * max(1.0, kappa):
                return IPMResult("unbounded", iterations=it)

        scaling = NTScaling(ops, s, z)
        lam = scaling.lmbda
        try:
            kkt.factor(scaling)
        except NumericalFailure:
            kkt.delta *= 100
            kkt.factor(scaling)

        u1 = kkt.solve(-c, b, h)

        def direction(dx, dy, dz, dt, ds, dk):
            wlds = scaling.apply_W(ops.jordan_solve(lam, ds))
            u2 = kkt.solve(dx, -dy, -(dz + wlds))
            den = kappa / tau - (c @ u1[0] + (b @ u1[1] if p else 0.0) + h @ u1[2])
            num = dt + dk / tau + c @ u2[0] + (b @ u2[1] if p else 0.0) + h @ u2[2]
            if abs(den) < 1e-14:
                raise NumericalFailure("degenerate tau system")
            dtau = num / den
            Dx = u2[0] + dtau * u1[0]
            Dy = u2[1] + dtau * u1[1]
            Dz = u2[2] + dtau * u1[2]
            Ds = wlds - scaling.apply_W(scaling.apply_W(Dz))
            Dk = (dk - kappa * dtau) / tau
            return Dx, Dy, Dz, Ds, dtau, Dk

        # affine (predictor) direction
        ds_aff = -ops.jordan_product(lam, lam)
        try:
            Dxa, Dya, Dza, Dsa, Dta, Dka = direction(
                -r1, -r2, -r3, -r4, ds_aff, -tau * kappa)
        except NumericalFailure:
            break

        alpha = min(ops.max_step(s, Dsa), ops.max_step(z, Dza))
        if Dta < 0:
            alpha = min(alpha, -tau / Dta)
        if Dka < 0:
            alpha = min(alpha, -kappa / Dka)
        alpha = min(alpha, 1.0)
        mu_aff = ((s + alpha * Dsa) @ (z + alpha * Dza) +
                  (tau + alpha * Dta) * (kappa + alpha * Dka)) / nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # combined (corrector) direction
        corr = ops.jordan_product(scaling.apply_Winv(Dsa), scaling.apply_W(Dza))
        ds_comb = -ops.jordan_product(lam, lam) - corr + sigma * mu * e
        dk_comb = -tau * kappa - Dta * Dka + sigma * mu
        f = 1.0 - sigma
        try:
            Dx, Dy, Dz, Ds, Dt, Dk = direction(
                -f * r1, -f * r2, -f * r3, -f * r4, ds_comb, dk_comb)
        except NumericalFailure:
            break

        alpha = min(ops.max_step(s, Ds), ops.max_step(z, Dz))
        if Dt < 0:
            alpha = min(alpha, -tau / Dt)
        if Dk < 0:
            alpha = min(alpha, -kappa / Dk)
        alpha = min(opt.step_frac * alpha, 1.0)
        if not np.isfinite(alpha) or alpha <= 1e-13:
            break

        x = x + alpha * Dx
        y = y + alpha * Dy
        z = z + alpha * Dz
        s = s + alpha * Ds
        tau += alpha * Dt
        kappa += alpha * Dk
        if tau <= 1e-14 or not np.isfinite(mu):
            break

    # final classification at iteration end
    by_hz = (b @ y if p else 0.0) + h @ z
    if by_hz < 0:
        cert = np.max(np.abs(form.A.T @ y + form.G.T @ z)) if p else \
            np.max(np.abs(form.G.T @ z))
        if cert / (-by_hz) <= 1e-6:
            return IPMResult("infeasible", iterations=opt.max_iter)
    cx = c @ x
    if cx < 0:
        ray = max(np.max(np.abs(form.A @ x)) if p else 0.0,
                  np.max(np.abs(form.G @ x + s)))
        if ray / (-cx) <= 1e-6:
            return IPMResult("unbounded", iterations=opt.max_iter)
    if best is not None and best[0] <= opt.stall_tol:
        scale = theta_p * theta_d
        return IPMResult("optimal", best[1], best[2] * scale, best[3] * scale,
                         best[4])
    return IPMResult("max_iter", iterations=opt.max_iter)


def solve_continuous(program, lb=None, ub=None, options=None):
    """Solve the continuous relaxation of a ConicProgram.

    Binaries are treated as continuous within their (possibly overridden)
    bounds.  Returns a SolutionPoint whose dual_bound is a valid lower bound
    on the relaxation optimum.
    """
    form = build_standard_form(program, lb, ub)
    if form is None:
        return SolutionPoint(np.zeros(program.num_variables), np.nan, "infeasible")
    res = solve_standard_form(form, options)
    if res.status == "optimal":
        obj = res.pcost + program.obj_const
        return SolutionPoint(res.x, obj, "optimal",
                             dual_bound=res.dcost + program.obj_const)
    if res.status == "infeasible":
        return SolutionPoint(np.zeros(program.num_variables), np.nan, "infeasible")
    if res.status == "unbounded":
        return SolutionPoint(np.zeros(program.num_variables), -np.inf, "unbounded")
    raise NumericalFailure(f"interior-point iteration stalled ({res.iterations} iters)")
