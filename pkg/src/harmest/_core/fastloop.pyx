# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation loop; same contract as pyloop.run_loop."""

from libc.math cimport fabs, isfinite

import numpy as np


cdef inline void _rhs(double* out, double* x, double y, double w,
                      double* orders, double* l, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += x[2 * i]
    for i in range(n):
        out[2 * i] = w * (-orders[i] * x[2 * i + 1] + l[2 * i] * (y - s))
        out[2 * i + 1] = w * (orders[i] * x[2 * i] + l[2 * i + 1] * (y - s))


def run_loop(orders, l, lam, y_half, omega_ext, x0, double h,
             int fll_mode, double gamma, double eps,
             double omega_min, double omega_max, double rate_min, double rate_max,
             double omega_lo, double omega_hi, double omega0,
             long log_every, double div_limit):
    cdef double[::1] orders_v = np.ascontiguousarray(orders, dtype=np.float64)
    cdef double[::1] l_v = np.ascontiguousarray(l, dtype=np.float64)
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] y_v = np.ascontiguousarray(y_half, dtype=np.float64)
    cdef int n = orders_v.shape[0]
    cdef int dim = 2 * n
    cdef long N = (y_v.shape[0] - 1) // 2
    if y_v.shape[0] != 2 * N + 1:
        raise ValueError("y_half must have odd length 2N + 1")

    cdef double[::1] omega_ext_v
    cdef double omega
    if fll_mode == 0:
        omega_ext_v = np.ascontiguousarray(omega_ext, dtype=np.float64)
        if omega_ext_v.shape[0] != N + 1:
            raise ValueError("omega_ext must supply one value per step instant")
        omega = omega_ext_v[0]
    else:
        omega_ext_v = np.zeros(1)
        omega = omega0

    if log_every < 1:
        log_every = 1
    ks = np.concatenate([np.arange(0, N, log_every, dtype=np.int64),
                         np.asarray([N], dtype=np.int64)])
    cdef long[::1] ks_v = ks
    cdef long M = ks_v.shape[0]
    x_log = np.empty((M, dim))
    omega_log = np.empty(M)
    cdef double[:, ::1] x_log_v = x_log
    cdef double[::1] omega_log_v = omega_log

    cdef double[::1] x_v = np.array(x0, dtype=np.float64, copy=True)
    scratch = np.empty((6, dim))
    cdef double[:, ::1] sc = scratch

    cdef long k = 0, row = 0
    cdef int j, failed = 0
    cdef double y0, ym, y1, e_y, lamx, den, delta, limited, gate, omega_next, s
    cdef double h6 = h / 6.0, h2 = h / 2.0

    with nogil:
        for k in range(N):
            if row < M and k == ks_v[row]:
                for j in range(dim):
                    x_log_v[row, j] = x_v[j]
                omega_log_v[row] = omega
                row += 1
            y0 = y_v[2 * k]
            ym = y_v[2 * k + 1]
            y1 = y_v[2 * k + 2]
            # classical RK4 with stage samples of the input
            _rhs(&sc[0, 0], &x_v[0], y0, omega, &orders_v[0], &l_v[0], n)
            for j in range(dim):
                sc[4, j] = x_v[j] + h2 * sc[0, j]
            _rhs(&sc[1, 0], &sc[4, 0], ym, omega, &orders_v[0], &l_v[0], n)
            for j in range(dim):
                sc[4, j] = x_v[j] + h2 * sc[1, j]
            _rhs(&sc[2, 0], &sc[4, 0], ym, omega, &orders_v[0], &l_v[0], n)
            for j in range(dim):
                sc[4, j] = x_v[j] + h * sc[2, j]
            _rhs(&sc[3, 0], &sc[4, 0], y1, omega, &orders_v[0], &l_v[0], n)
            failed = 0
            for j in range(dim):
                sc[5, j] = x_v[j] + h6 * (sc[0, j] + 2.0 * sc[1, j]
                                          + 2.0 * sc[2, j] + sc[3, j])
                if not isfinite(sc[5, j]) or fabs(sc[5, j]) > div_limit:
                    failed = 1
            if failed:
                break
            if fll_mode == 0:
                omega_next = omega_ext_v[k + 1]
            else:
                s = 0.0
                for j in range(n):
                    s += x_v[2 * j]
                e_y = y0 - s
                lamx = 0.0
                for j in range(dim):
                    lamx += lam_v[j] * x_v[j]
                if fll_mode == 1:
                    den = x_v[0] * x_v[0] + x_v[1] * x_v[1]
                    if den < eps:
                        den = eps
                    delta = gamma * omega * e_y * lamx / den
                    limited = delta
                    if limited > rate_max:
                        limited = rate_max
                    elif limited < rate_min:
                        limited = rate_min
                    gate = 1.0
                    if (omega >= omega_max and delta >= 0.0) or \
                            (omega <= omega_min and delta <= 0.0):
                        gate = 0.0
                    omega_next = omega + h * gate * limited
                    if omega_next > omega_hi:
                        omega_next = omega_hi
                    elif omega_next < omega_lo:
                        omega_next = omega_lo
                elif fll_mode == 2:
                    den = x_v[0] * x_v[0] + x_v[1] * x_v[1]
                    if den < eps:
                        den = eps
                    omega_next = omega + h * (gamma * omega * e_y * lamx / den)
                else:
                    omega_next = omega + h * (gamma * lamx * e_y)
                if not isfinite(omega_next):
                    failed = 1
            if failed:
                break
            for j in range(dim):
                x_v[j] = sc[5, j]
            omega = omega_next

    if failed:
        return 1, k + 1, ks[:row], x_log[:row], omega_log[:row]
    for j in range(dim):
        x_log_v[row, j] = x_v[j]
    omega_log_v[row] = omega
    return 0, -1, ks, x_log, omega_log
