# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled swing-equation integrator (hot kernel).

Same algorithm as freqsched._swing_py; keep the two implementations in sync.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _rhs(double t, double y, double d_total, double r,
                        double td, double dpc, double dpl, double inv2h,
                        double t_switch, double hold) nogil:
    cdef double ramp = r * t / td if t < td else r
    cdef double pc = dpc if (t >= t_switch and t <= t_switch + hold) else 0.0
    return (-d_total * y + ramp + pc - dpl) * inv2h


def integrate(double h_total, double d_total, double r, double td,
              double dpl, double dpc, double dt, long n_steps, double hold):
    """Fixed-step RK4 on  2H df' = -D df + ramp(t) + pc(t) - dPL.

    Returns (df, dfdt, detected, t_nadir, df_nadir, idx_nadir); pc switches
    on at the first detected upward zero crossing of df'.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] df_arr = np.zeros(n_steps + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dfdt_arr = np.zeros(n_steps + 1)
    cdef double[::1] df = df_arr
    cdef double[::1] dfdt = dfdt_arr
    cdef double inv2h = 1.0 / (2.0 * h_total)
    cdef double t_switch = np.inf
    cdef bint detected = False
    cdef double t_nadir = np.nan
    cdef double df_nadir = np.nan
    cdef long idx_nadir = -1
    cdef double y = 0.0
    cdef double t, k1, k2, k3, k4, d_next, frac
    cdef long i

    dfdt[0] = _rhs(0.0, y, d_total, r, td, dpc, dpl, inv2h, t_switch, hold)
    with nogil:
        for i in range(n_steps):
            t = i * dt
            k1 = dfdt[i]
            k2 = _rhs(t + 0.5 * dt, y + 0.5 * dt * k1, d_total, r, td, dpc,
                      dpl, inv2h, t_switch, hold)
            k3 = _rhs(t + 0.5 * dt, y + 0.5 * dt * k2, d_total, r, td, dpc,
                      dpl, inv2h, t_switch, hold)
            k4 = _rhs(t + dt, y + dt * k3, d_total, r, td, dpc,
                      dpl, inv2h, t_switch, hold)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            d_next = _rhs(t + dt, y, d_total, r, td, dpc, dpl, inv2h,
                          t_switch, hold)
            df[i + 1] = y
            dfdt[i + 1] = d_next
            if not detected and dfdt[i] < 0.0 and d_next >= 0.0:
                frac = dfdt[i] / (dfdt[i] - d_next)
                t_nadir = t + frac * dt
                df_nadir = df[i] + dt * (frac * dfdt[i]
                                         + 0.5 * frac * frac * (d_next - dfdt[i]))
                idx_nadir = i + 1
                detected = True
                t_switch = t_nadir
                dfdt[i + 1] = _rhs(t + dt, y, d_total, r, td, dpc, dpl,
                                   inv2h, t_switch, hold)
    return df_arr, dfdt_arr, bool(detected), t_nadir, df_nadir, idx_nadir
