"""Pure-Python swing-equation integrator, fallback for the compiled kernel.

Mirrors freqsched._swing step for step so both kernels produce the same
trajectories; keep the two implementations in sync.
"""

import numpy as np


def integrate(h_total, d_total, r, td, dpl, dpc, dt, n_steps, hold):
    """Fixed-step RK4 on  2H df' = -D df + ramp(t) + pc(t) - dPL.

    ramp(t) ramps linearly to r over td; pc(t) injects dpc from the first
    detected upward zero crossing of df' (the frequency nadir) for `hold`
    seconds.  Returns (df, dfdt, detected, t_nadir, df_nadir, idx_nadir).
    """
    df = np.zeros(n_steps + 1)
    dfdt = np.zeros(n_steps + 1)
    inv2h = 1.0 / (2.0 * h_total)
    t_switch = np.inf
    detected = False
    t_nadir = np.nan
    df_nadir = np.nan
    idx_nadir = -1

    def rhs(t, y):
        ramp = r * t / td if t < td else r
        pc = dpc if (t >= t_switch and t <= t_switch + hold) else 0.0
        return (-d_total * y + ramp + pc - dpl) * inv2h

    y = 0.0
    dfdt[0] = rhs(0.0, y)
    for i in range(n_steps):
        t = i * dt
        k1 = dfdt[i]
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        d_next = rhs(t + dt, y)
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
            dfdt[i + 1] = rhs(t + dt, y)   # pc may be active from here on
    return df, dfdt, detected, t_nadir, df_nadir, idx_nadir
