"""Closed-form quasi-steady-state frequency responses of the observer.

For a constant frequency estimate w_hat and a probe sinusoid at angular
frequency w, the observer acts as a linear filter.  With the abbreviations

    xi(w)   = sum_k k_k nu_k w_hat w  prod_{l != k} (nu_l^2 w_hat^2 - w^2)
    zeta(w) = prod_k (nu_k^2 w_hat^2 - w^2)
              - sum_k g_k nu_k^2 w_hat^2 prod_{l != k} (nu_l^2 w_hat^2 - w^2)

the transfer denominator evaluated at s = j*w equals zeta + j*xi, and the
in-phase, quadrature and error channels of harmonic i have numerators

    N_Y = (-g_i nu_i^2 w_hat^2 + j k_i nu_i w_hat w) * P_i
    N_Q = ( k_i nu_i^2 w_hat^2 + j g_i nu_i w_hat w) * P_i
    N_E = prod_k (nu_k^2 w_hat^2 - w^2)

with P_i = prod_{k != i} (nu_k^2 w_hat^2 - w^2).  Gains are reported as
magnitudes (always >= 0) and phases quadrant-correct in (-pi, pi], so the
values match a direct complex evaluation of the transfer functions.  The
error gain vanishes at every resonance w = nu_k * w_hat, and the own-
harmonic pass-through at w = nu_i * w_hat is exactly (1, 0).

These closed forms are the independent oracle for long-run simulations of
the observer and for the sign analysis of the frequency adaption law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .extraction import wrap_angle
from .observer import ObserverGains

__all__ = [
    "xi_zeta",
    "ResponseSet",
    "responses",
    "one_period_integral_sign",
    "fit_sinusoid",
]


def _xi_zeta_parts(orders, k, g, omega_hat, omega):
    n = len(orders)
    base = orders * orders * omega_hat * omega_hat - omega * omega
    xi = 0.0
    zeta = float(np.prod(base))
    for idx in range(n):
        rest = 1.0
        for j in range(n):
            if j != idx:
                rest *= base[j]
        xi += k[idx] * orders[idx] * omega_hat * omega * rest
        zeta -= g[idx] * orders[idx] ** 2 * omega_hat ** 2 * rest
    return xi, zeta


def xi_zeta(harmonics, gains: ObserverGains, omega_hat: float, omega: float):
    """Real/imaginary split (zeta, xi) of the closed-loop denominator at s = j*w."""
    if omega_hat <= 0:
        raise ValueError(f"frequency estimate must be positive, got {omega_hat}")
    orders = np.asarray([float(v) for v in harmonics], dtype=float)
    xi, zeta = _xi_zeta_parts(orders, gains.k, gains.g, omega_hat, omega)
    return xi, zeta


@dataclass(frozen=True)
class ResponseSet:
    """Gains (>= 0) and phases (rad, (-pi, pi]) of one harmonic's channels."""

    omega: float
    a_y: float
    phi_y: float
    a_q: float
    phi_q: float
    a_e: float
    phi_e: float


def responses(harmonics, gains: ObserverGains, omega_hat: float, omega: float,
              i: int) -> ResponseSet:
    """Closed-form steady-state response of harmonic i at probe frequency w."""
    orders = np.asarray([float(v) for v in harmonics], dtype=float)
    if not 0 <= i < len(orders):
        raise ValueError(f"harmonic index {i} out of range")
    xi, zeta = _xi_zeta_parts(orders, gains.k, gains.g, omega_hat, omega)
    mag2 = zeta * zeta + xi * xi
    if mag2 == 0.0:
        raise ZeroDivisionError(
            f"response denominator vanishes at (w_hat={omega_hat}, w={omega})"
        )
    base = orders * orders * omega_hat * omega_hat - omega * omega
    P_i = 1.0
    for kk in range(len(orders)):
        if kk != i:
            P_i *= base[kk]
    den_mag = math.sqrt(mag2)
    den_arg = math.atan2(xi, zeta)
    k_i, g_i = gains.k[i], gains.g[i]
    nu_i = orders[i]

    def channel(re, im):
        amp = math.hypot(re, im) / den_mag
        if re == 0.0 and im == 0.0:
            return amp, 0.0
        return amp, wrap_angle(math.atan2(im, re) - den_arg)

    a_y, phi_y = channel(-g_i * nu_i ** 2 * omega_hat ** 2 * P_i,
                         k_i * nu_i * omega_hat * omega * P_i)
    a_q, phi_q = channel(k_i * nu_i ** 2 * omega_hat ** 2 * P_i,
                         g_i * nu_i * omega_hat * omega * P_i)
    a_e, phi_e = channel(float(np.prod(base)), 0.0)
    return ResponseSet(omega=omega, a_y=a_y, phi_y=phi_y, a_q=a_q, phi_q=phi_q,
                       a_e=a_e, phi_e=phi_e)


def one_period_integral_sign(harmonics, gains: ObserverGains, lam, omega_hat: float,
                             omega: float, i: int = 0) -> int:
    """Sign of the one-period integral of e_y * lambda^T x_hat in quasi-steady state.

    The solved integral is proportional to

        (w^2 - w_hat^2) * (l^T J_i lambda) * prod_{k != i}(nu_k^2 w_hat^2 - nu_i^2 w^2)^2

    divided by a strictly positive factor, so away from resonant
    degeneracies the sign is sign((w^2 - w_hat^2) * l^T J_i lambda).
    """
    if omega <= 0 or omega_hat <= 0:
        raise ValueError("frequencies must be positive")
    orders = np.asarray([float(v) for v in harmonics], dtype=float)
    lam = np.asarray(lam, dtype=float)
    l = gains.l
    # l^T J_i lambda with J_i holding [[0,-1],[1,0]] in block i only
    coupling = -l[2 * i] * lam[2 * i + 1] + l[2 * i + 1] * lam[2 * i]
    prod_sq = 1.0
    for kk in range(len(orders)):
        if kk != i:
            prod_sq *= (orders[kk] ** 2 * omega_hat ** 2 - orders[i] ** 2 * omega ** 2) ** 2
    value = (omega * omega - omega_hat * omega_hat) * coupling * prod_sq
    if value > 0.0:
        return 1
    if value < 0.0:
        return -1
    return 0


def fit_sinusoid(t, u, omega: float):
    """Least-squares fit u(t) ~ A*cos(omega*t + phi); returns (A, phi).

    phi is quadrant-correct in (-pi, pi].  Fit over an integer number of
    periods for an unbiased estimate.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    M = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    (p, q), *_ = np.linalg.lstsq(M, u, rcond=None)
    amp = math.hypot(p, q)
    phase = math.atan2(-q, p) if amp > 0 else 0.0
    if phase == -math.pi:
        phase = math.pi
    return amp, phase
