"""Distributionally robust frequency constraint blocks.

Builds the rotated-cone nadir constraint with its conservative piecewise
linearization and big-M interval indicators, plus the linear RoCoF and
steady-state constraints, on top of a ConicProgram.  The uncertainty of the
noncritical load shedding enters through the one-sided Chebyshev (Cantelli)
shift xi(eta) * sigma with sigma = alpha * (mean shed).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .conic import BINARY


class DRCCError(Exception):
    pass


class SizingError(DRCCError):
    """Supplied big-M constants fail the certified bound check."""


def xi(eta):
    """Cantelli multiplier sqrt(eta / (1 - eta))."""
    if not 0.0 < eta < 1.0:
        raise DRCCError(f"confidence level must be in (0,1), got {eta}")
    return math.sqrt(eta / (1.0 - eta))


@dataclass
class DRCCParams:
    eta: float = 0.95            # confidence level
    alpha: float = 0.0           # sigma = alpha * mean shed
    dpl_max: float = 0.0         # worst-case disturbance (PCC rating by default)
    segments: int = 8            # N
    range_mult: float = 12.0     # K
    big_m: float = None          # M  (certified automatically when None)
    big_m_prime: float = None    # M'

    def __post_init__(self):
        if self.segments < 2:
            raise DRCCError("need at least 2 linearization segments")
        if self.range_mult <= 0:
            raise DRCCError("range multiplier K must be positive")
        if self.alpha < 0:
            raise DRCCError("uncertainty slope alpha must be >= 0")
        xi(self.eta)

    @property
    def k(self):
        return self.range_mult / (self.segments - 1)


def pwl_coefficients(params):
    """Tangent-line coefficients (a_n, b_n) and x2/d validity intervals.

    Segment n < N is the tangent of sqrt(x2^2 - d x2) at x2 = (k n + 1) d and
    covers x2/d in [k(n-1)+1, kn+1); the last segment is the asymptote
    x2 - d/2 for x2/d >= K+1.  Every tangent over-estimates the square root
    globally, which is what makes the linearization conservative.
    """
    k = params.k
    out = []
    for n in range(1, params.segments):
        root = 2.0 * math.sqrt(n * n * k * k + n * k)
        a_n = (2.0 * n * k + 1.0) / root
        b_n = (-n * k - 1.0) / root
        out.append((a_n, b_n, (k * (n - 1) + 1.0, k * n + 1.0)))
    out.append((1.0, -0.5, (params.range_mult + 1.0, math.inf)))
    return out


def active_segment(params, ratio):
    """1-based segment index for x2/d = ratio; boundary ties go to the lower one."""
    k = params.k
    if ratio >= params.range_mult + 1.0:
        return params.segments
    n = int(math.floor((ratio - 1.0) / k)) + 1
    if n > 1 and abs(ratio - (k * (n - 1) + 1.0)) == 0.0:
        return n - 1
    return min(max(n, 1), params.segments - 1)


def pwl_value(params, d, x2):
    """Conservative approximation of sqrt(x2^2 - d x2) via the active segment."""
    coeffs = pwl_coefficients(params)
    n = active_segment(params, x2 / d)
    a_n, b_n, _ = coeffs[n - 1]
    return a_n * x2 + b_n * d


def certified_big_m(params, d, x2_max):
    """Smallest safe big-M pair for the given x2 range."""
    coeffs = pwl_coefficients(params)
    a1, b1, _ = coeffs[0]
    m = x2_max + (params.range_mult + 1.0) * d
    m_prime = a1 * x2_max + abs(b1) * d
    return m, m_prime


@dataclass
class NadirBlock:
    x1: int
    x2: int
    d: float
    eps: float
    coefficients: list
    z: dict = field(default_factory=dict)     # n -> handle, n = 1..N
    z1: dict = field(default_factory=dict)    # n -> handle, n = 1..N-1
    z2: dict = field(default_factory=dict)
    cone: int = -1
    x2_def_row: int = -1
    big_m: float = 0.0
    big_m_prime: float = 0.0
    x2_max: float = 0.0

    def implied_assignment(self, params, x2_value):
        """One-hot z vector the interval logic forces for a given x2."""
        n = active_segment(params, x2_value / self.d)
        return {m: 1.0 if m == n else 0.0 for m in self.z}


def build_nadir_block(program, h, r, dpl0, dpd_mu, wind_si, params, df_lim,
                      td, d0, tag=""):
    """Add the robust nadir constraint for one (period, scenario).

    wind_si is a list of (handle, gamma) pairs for the per-unit wind
    synthetic inertia.  Adds:
      - x2 >= (dpl0 - (1 - xi alpha) dpd_mu) / sqrt(df_lim), with x2 >= d;
      - the rotated cone H R >= td/4 x1^2 + dpl_max td/4 sum gamma Hsw^2;
      - big-M interval indicators tying the one-hot z to x2's segment;
      - per-segment bounds x1 >= a_n x2 + b_n d - M'(1 - z_n).
    """
    if df_lim <= 0 or td <= 0 or d0 <= 0:
        raise DRCCError("df_lim, td and d0 must be positive")
    d = math.sqrt(df_lim) * d0
    xiv = xi(params.eta)
    shed_coef = 1.0 - xiv * params.alpha
    x2_max = params.dpl_max * (1.0 + xiv * params.alpha) / math.sqrt(df_lim)
    m_req, mp_req = certified_big_m(params, d, max(x2_max, d))
    m = params.big_m if params.big_m is not None else m_req
    mp = params.big_m_prime if params.big_m_prime is not None else mp_req
    if m < m_req - 1e-9 or mp < mp_req - 1e-9:
        raise SizingError(
            f"big-M too small: need M >= {m_req:.6g}, M' >= {mp_req:.6g}; "
            f"got M = {m:.6g}, M' = {mp:.6g}")
    eps = 1e-6 * d
    coeffs = pwl_coefficients(params)
    N = params.segments
    k = params.k

    x2 = program.add_variable(f"x2{tag}", lb=d, ub=max(x2_max, d))
    x1 = program.add_variable(f"x1{tag}", lb=0.0, ub=mp)
    blk = NadirBlock(x1=x1, x2=x2, d=d, eps=eps, coefficients=coeffs,
                     big_m=m, big_m_prime=mp, x2_max=max(x2_max, d))

    # robust disturbance definition (>=: x2 floats at max(d, shifted loss))
    blk.x2_def_row = program.add_row(
        {x2: math.sqrt(df_lim), dpl0: -1.0, dpd_mu: shed_coef},
        ">=", 0.0, name=f"x2_def{tag}")

    # rotated cone H R >= td/4 x1^2 + dpl_max td/4 sum gamma Hsw^2
    u = []
    ux1 = program.add_variable(f"u_x1{tag}")
    program.add_row({ux1: 1.0, x1: -math.sqrt(td / 2.0)}, "=", 0.0,
                    name=f"u_x1_def{tag}")
    u.append(ux1)
    for j, (hsw, gamma) in enumerate(wind_si):
        if gamma < 0:
            raise DRCCError("wind damping penalty gamma must be >= 0")
        if gamma == 0.0:
            continue
        uw = program.add_variable(f"u_w{j}{tag}")
        program.add_row(
            {uw: 1.0, hsw: -math.sqrt(params.dpl_max * td * gamma / 2.0)},
            "=", 0.0, name=f"u_w{j}_def{tag}")
        u.append(uw)
    blk.cone = program.add_rotated_cone(h, r, u)

    # interval indicators; thresholds at (k(n-1)+1) d and (kn+1) d
    for n in range(1, N):
        lo = (k * (n - 1) + 1.0) * d
        hi = (k * n + 1.0) * d
        z1 = program.add_variable(f"z{n}a{tag}", kind=BINARY)
        z2 = program.add_variable(f"z{n}b{tag}", kind=BINARY)
        zn = program.add_variable(f"z{n}{tag}", kind=BINARY)
        blk.z1[n], blk.z2[n], blk.z[n] = z1, z2, zn
        # z1 = 1  <=>  x2 above the lower edge
        program.add_row({x2: 1.0, z1: -m}, ">=", lo - eps - m,
                        name=f"seg{n}_lo_on{tag}")
        program.add_row({x2: 1.0, z1: -m}, "<=", lo, name=f"seg{n}_lo_off{tag}")
        # z2 = 1  <=>  x2 below the upper edge
        program.add_row({x2: 1.0, z2: m}, "<=", hi + m, name=f"seg{n}_hi_on{tag}")
        program.add_row({x2: 1.0, z2: m}, ">=", hi - eps,
                        name=f"seg{n}_hi_off{tag}")
        program.add_row({zn: 1.0, z1: -1.0, z2: -1.0}, "=", -1.0,
                        name=f"seg{n}_link{tag}")
    zN = program.add_variable(f"z{N}{tag}", kind=BINARY)
    blk.z[N] = zN
    tail = (params.range_mult + 1.0) * d
    program.add_row({x2: 1.0, zN: -m}, ">=", tail - eps - m,
                    name=f"seg{N}_lo_on{tag}")
    program.add_row({x2: 1.0, zN: -m}, "<=", tail, name=f"seg{N}_lo_off{tag}")
    program.add_row({blk.z[n]: 1.0 for n in blk.z}, "=", 1.0,
                    name=f"one_hot{tag}")

    # relaxed per-segment equalities: only the active one binds
    for n in range(1, N + 1):
        a_n, b_n, _ = coeffs[n - 1]
        program.add_row({x1: 1.0, x2: -a_n, blk.z[n]: -mp}, ">=",
                        b_n * d - mp, name=f"seg{n}_line{tag}")

    # full-range chord of sqrt(x2^2 - d x2): a linear under-estimator on the
    # whole x2 box, hence implied at every integral point but binding in the
    # fractional-z relaxation, which tightens the branch-and-bound root
    x2ub = blk.x2_max
    if x2ub > d * (1.0 + 1e-12):
        f_ub = math.sqrt(x2ub * x2ub - d * x2ub)
        slope = f_ub / (x2ub - d)
        program.add_row({x1: 1.0, x2: -slope}, ">=", -slope * d,
                        name=f"nadir_chord{tag}")
    return blk


def build_rocof_constraint(program, h, dpl0, dpd_mu, params, rocof_lim,
                           tag=""):
    """2 H rocof_lim >= mean loss + xi sigma, one linear row."""
    if rocof_lim <= 0:
        raise DRCCError("rocof limit must be positive")
    shed_coef = 1.0 - xi(params.eta) * params.alpha
    return program.add_row(
        {h: 2.0 * rocof_lim, dpl0: -1.0, dpd_mu: shed_coef}, ">=", 0.0,
        name=f"rocof{tag}")


def build_ss_constraint(program, r, dpc, dpl0, dpd_mu, wind_si, params,
                        dfss_lim, d0, tag=""):
    """R + dPc + D0 dfss - (mean loss + xi sigma) >= dfss sum gamma Hsw^2.

    The quadratic sits on the small side, so one rotated cone with a constant
    1/2 partner encodes it convexly.
    """
    if dfss_lim <= 0:
        raise DRCCError("steady-state limit must be positive")
    shed_coef = 1.0 - xi(params.eta) * params.alpha
    v = program.add_variable(f"ss_margin{tag}", lb=0.0)
    program.add_row(
        {v: 1.0, r: -1.0, dpc: -1.0, dpl0: 1.0, dpd_mu: -shed_coef},
        "=", d0 * dfss_lim, name=f"ss_def{tag}")
    if not program.has_variable("half"):
        program.add_variable("half", lb=0.5, ub=0.5)
    half = program.handle("half")
    u = []
    for j, (hsw, gamma) in enumerate(wind_si):
        if gamma == 0.0:
            continue
        uw = program.add_variable(f"ss_u{j}{tag}")
        program.add_row({uw: 1.0, hsw: -math.sqrt(gamma * dfss_lim)}, "=",
                        0.0, name=f"ss_u{j}_def{tag}")
        u.append(uw)
    return program.add_rotated_cone(v, half, u)


def deterministic_nadir_check(h, r, d0, gamma_h2, td, df_lim, dp):
    """Exact quadratic sufficient condition for the nadir limit (post-hoc oracle).

    gamma_h2 is sum over wind units of gamma * Hsw^2 evaluated at the point;
    here the disturbance multiplies the wind term exactly, no constant
    substitution.  Returns (ok, margin).
    """
    rhs = dp * dp * td / (4.0 * df_lim) - dp * td * d0 / 4.0 \
        + dp * td * gamma_h2 / 4.0
    margin = h * r - rhs
    return margin >= -1e-9, margin


# -- sampling oracle for the Cantelli bound -----------------------------------

class SamplerMomentError(DRCCError):
    pass


def empirical_coverage(mu, sigma, eta, sampler, n_samples):
    """Fraction of samples below mu + xi(eta) sigma.

    The sampler must realize the stated first two moments (checked to 1%);
    under any such distribution the Cantelli bound guarantees coverage of at
    least eta.
    """
    if n_samples < 10_000:
        raise DRCCError("need at least 1e4 samples for a stable estimate")
    x = np.asarray(sampler(n_samples), dtype=float)
    m, s = float(np.mean(x)), float(np.std(x))
    if abs(m - mu) > 0.01 * max(abs(mu), sigma, 1e-9):
        raise SamplerMomentError(f"sample mean {m} deviates from {mu}")
    if abs(s - sigma) > 0.01 * max(sigma, 1e-9 * max(1.0, abs(mu)), 1e-12):
        raise SamplerMomentError(f"sample std {s} deviates from {sigma}")
    return float(np.mean(x <= mu + xi(eta) * sigma))


def cantelli_tight_sampler(mu, sigma, eta, rng, shift=0.0):
    """Two-point distribution attaining the Cantelli bound with equality.

    Mass eta at mu - sigma sqrt((1-eta)/eta), mass 1-eta at
    mu + sigma sqrt(eta/(1-eta)); `shift` nudges the upper atom past the
    threshold to exhibit the strict-inequality coverage -> eta.
    """
    lo = mu - sigma * math.sqrt((1.0 - eta) / eta)
    hi = mu + sigma * math.sqrt(eta / (1.0 - eta)) * (1.0 + shift)

    def sample(n):
        u = rng.random(n)
        return np.where(u < eta, lo, hi)

    return sample
