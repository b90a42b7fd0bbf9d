"""Frequency-locked loop: adapts the fundamental frequency estimate.

The adaption signal is built from the estimation error e_y = y - y_hat and
the observer state through a constant selection vector

    lambda = (g_1, -k_1, 0, ..., 0)

(the fundamental gain block rotated by the inverse of [[0,-1],[1,0]]).
This choice is sign-correct for both the single-gain and two-gain observer
variants: l^T J_1 lambda = k_1^2 + g_1^2 > 0, so in quasi-steady state the
per-period average of e_y * lambda^T x_hat has the sign of (w - w_hat).

Three update laws are provided, all integrated by explicit Euler at the
sample rate (the loop is deliberately slow relative to the observer):

  "mFLL"       gain-normalized delta with sign-correct conditional
               integration (anti-windup) and rate limitation; the estimate
               stays inside [min(w0, w_min), max(w0, w_max)] at all times;
  "sFLL-GN"    gain-normalized delta only;
  "sFLL-plain" constant-gain law gamma * lambda^T x_hat * e_y; may drive
               the estimate negative, which the observer then reports as
               divergence.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .observer import ObserverGains

__all__ = [
    "MFLL",
    "SFLL_GN",
    "SFLL_PLAIN",
    "FLL_VARIANTS",
    "FllConfig",
    "FllState",
    "lambda_vector",
    "normalized_delta",
    "anti_windup_gate",
    "rate_limit",
    "fll_step",
]

MFLL = "mFLL"
SFLL_GN = "sFLL-GN"
SFLL_PLAIN = "sFLL-plain"
FLL_VARIANTS = (MFLL, SFLL_GN, SFLL_PLAIN)


def lambda_vector(gains: ObserverGains) -> np.ndarray:
    """Selection vector (g_1, -k_1, 0, ..., 0) from the fundamental gain block."""
    lam = np.zeros(2 * gains.n)
    lam[0] = gains.g[0]
    lam[1] = -gains.k[0]
    return lam


@dataclass(frozen=True)
class FllConfig:
    """Tuning of the frequency adaption law.

    gamma is the normalized-law gain for "mFLL"/"sFLL-GN" and the plain
    constant gain for "sFLL-plain".  epsilon floors the normalization
    denominator; omega_min/omega_max bound the admissible frequency band
    (anti-windup, "mFLL" only); rate_min/rate_max bound the per-second
    change of the estimate ("mFLL" only).
    """

    gamma: float
    epsilon: float
    omega_min: float
    omega_max: float
    rate_min: float
    rate_max: float
    variant: str
    lam: np.ndarray

    def __post_init__(self):
        if self.variant not in FLL_VARIANTS:
            raise ValueError(f"unknown FLL variant {self.variant!r}")
        if self.gamma <= 0:
            raise ValueError(f"adaption gain must be positive, got {self.gamma}")
        if self.epsilon <= 0:
            raise ValueError(f"normalization floor must be positive, got {self.epsilon}")
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError(
                f"need 0 < omega_min < omega_max, got ({self.omega_min}, {self.omega_max})"
            )
        if not self.rate_min < 0 < self.rate_max:
            raise ValueError(
                f"need rate_min < 0 < rate_max, got ({self.rate_min}, {self.rate_max})"
            )

    @classmethod
    def for_gains(cls, gains: ObserverGains, gamma: float, epsilon: float,
                  omega_min: float, omega_max: float, rate_min: float,
                  rate_max: float, variant: str = MFLL):
        """Build the config with lambda derived from the observer gains.

        Checks the sign-correctness condition l^T J_1 lambda > 0, which for
        the derived lambda reduces to k_1^2 + g_1^2 > 0.
        """
        lam = lambda_vector(gains)
        sign = gains.l[0] * (-lam[1]) + gains.l[1] * lam[0]  # l_1^T (Jbar @ lam_1)
        if sign <= 0:
            raise ValueError(
                "sign-correctness condition violated: the fundamental gain "
                "block is zero, so the adaption direction is undefined"
            )
        return cls(gamma=gamma, epsilon=epsilon, omega_min=omega_min,
                   omega_max=omega_max, rate_min=rate_min, rate_max=rate_max,
                   variant=variant, lam=lam)


@dataclass(frozen=True)
class FllState:
    """Frequency estimate, the last applied rate, and the frozen clamp interval."""

    omega_hat: float
    delta: float = 0.0
    lo: float = -np.inf
    hi: float = np.inf

    @classmethod
    def initial(cls, config: FllConfig, omega0: float):
        if config.variant == MFLL:
            return cls(omega_hat=float(omega0), delta=0.0,
                       lo=min(omega0, config.omega_min),
                       hi=max(omega0, config.omega_max))
        return cls(omega_hat=float(omega0), delta=0.0)


def normalized_delta(config: FllConfig, state: FllState, e_y: float, x_hat) -> float:
    """Gain-normalized adaption rate gamma * w_hat * e_y * lambda^T x_hat / max(|x1|^2, eps)."""
    x = np.asarray(getattr(x_hat, "x", x_hat), dtype=float)
    denom = max(x[0] * x[0] + x[1] * x[1], config.epsilon)
    return config.gamma * state.omega_hat * e_y * float(config.lam @ x) / denom


def anti_windup_gate(omega_hat: float, delta: float, config: FllConfig) -> int:
    """0 when the estimate sits at/over a band edge and the rate points outward."""
    if (omega_hat >= config.omega_max and delta >= 0.0) or (
        omega_hat <= config.omega_min and delta <= 0.0
    ):
        return 0
    return 1


def rate_limit(delta: float, config: FllConfig) -> float:
    """Clamp the adaption rate into [rate_min, rate_max]."""
    return min(max(delta, config.rate_min), config.rate_max)


def fll_step(config: FllConfig, state: FllState, e_y: float, x_hat, h: float) -> FllState:
    """One explicit-Euler update of the frequency estimate.

    For the "mFLL" variant the post-update value is clamped into the frozen
    interval [min(w0, w_min), max(w0, w_max)]: conditional integration alone
    cannot prevent a single discrete step from overshooting a band edge by
    up to h * rate_max, and the interval bound is part of the contract.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    if config.variant == MFLL:
        delta = normalized_delta(config, state, e_y, x_hat)
        limited = rate_limit(delta, config)
        gate = anti_windup_gate(state.omega_hat, delta, config)
        applied = gate * limited
        omega_next = state.omega_hat + h * applied
        omega_next = min(max(omega_next, state.lo), state.hi)
        return replace(state, omega_hat=omega_next, delta=applied)
    if config.variant == SFLL_GN:
        delta = normalized_delta(config, state, e_y, x_hat)
        return replace(state, omega_hat=state.omega_hat + h * delta, delta=delta)
    # plain law: constant gain, no normalization, no safeguards
    x = np.asarray(getattr(x_hat, "x", x_hat), dtype=float)
    delta = config.gamma * float(config.lam @ x) * e_y
    return replace(state, omega_hat=state.omega_hat + h * delta, delta=delta)
