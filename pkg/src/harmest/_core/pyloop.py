"""Pure-numpy simulation loop: reference implementation of the kernel.

Semantics shared with the compiled backend (fastloop):

  - N = (len(y_half) - 1) // 2 steps of size h; y_half holds the input on
    the half grid t = j*h/2 so each RK4 step sees the stage samples
    (y[2k], y[2k+1], y[2k+2]);
  - the frequency estimate is held constant within a step and updated by
    explicit Euler afterwards (fll_mode 1/2/3) or read from omega_ext
    (fll_mode 0, one value per step instant);
  - rows (state, frequency estimate) are recorded at step indices
    0, log_every, 2*log_every, ... and at the final index N;
  - any non-finite or out-of-range state entry (or a non-finite frequency
    estimate) stops the run: status 1 with the failing step index, logs
    truncated to the rows already recorded.

fll_mode: 0 external, 1 banded/rate-limited normalized law, 2 normalized
law, 3 plain constant-gain law.
"""
from __future__ import annotations

import numpy as np

from ..observer import rk4_step

__all__ = ["run_loop"]


def run_loop(orders, l, lam, y_half, omega_ext, x0, h,
             fll_mode, gamma, eps, omega_min, omega_max, rate_min, rate_max,
             omega_lo, omega_hi, omega0, log_every, div_limit):
    orders = np.asarray(orders, dtype=float)
    l = np.asarray(l, dtype=float)
    lam = np.asarray(lam, dtype=float)
    y_half = np.asarray(y_half, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    N = (len(y_half) - 1) // 2
    if len(y_half) != 2 * N + 1:
        raise ValueError("y_half must have odd length 2N + 1")
    if fll_mode == 0:
        omega_ext = np.asarray(omega_ext, dtype=float)
        if len(omega_ext) != N + 1:
            raise ValueError("omega_ext must supply one value per step instant")
        omega = float(omega_ext[0])
    else:
        omega = float(omega0)

    ks = list(range(0, N, max(int(log_every), 1))) + [N]
    M = len(ks)
    x_log = np.empty((M, len(x)))
    omega_log = np.empty(M)
    ks_arr = np.asarray(ks, dtype=np.int64)
    row = 0

    for k in range(N):
        if k == ks[row]:
            x_log[row] = x
            omega_log[row] = omega
            row += 1
        y0 = y_half[2 * k]
        ym = y_half[2 * k + 1]
        y1 = y_half[2 * k + 2]
        x_next = rk4_step(x, (y0, ym, y1), omega, orders, l, h)
        if not np.all(np.isfinite(x_next)) or np.abs(x_next).max() > div_limit:
            return 1, k + 1, ks_arr[:row], x_log[:row], omega_log[:row]
        if fll_mode == 0:
            omega_next = float(omega_ext[k + 1])
        else:
            e_y = y0 - x[0::2].sum()
            lamx = float(lam @ x)
            if fll_mode == 1:
                den = max(x[0] * x[0] + x[1] * x[1], eps)
                delta = gamma * omega * e_y * lamx / den
                limited = min(max(delta, rate_min), rate_max)
                gate = 0.0 if ((omega >= omega_max and delta >= 0.0)
                               or (omega <= omega_min and delta <= 0.0)) else 1.0
                omega_next = omega + h * gate * limited
                omega_next = min(max(omega_next, omega_lo), omega_hi)
            elif fll_mode == 2:
                den = max(x[0] * x[0] + x[1] * x[1], eps)
                omega_next = omega + h * (gamma * omega * e_y * lamx / den)
            else:
                omega_next = omega + h * (gamma * lamx * e_y)
            if not np.isfinite(omega_next):
                return 1, k + 1, ks_arr[:row], x_log[:row], omega_log[:row]
        x = x_next
        omega = omega_next

    x_log[row] = x
    omega_log[row] = omega
    return 0, -1, ks_arr, x_log, omega_log
