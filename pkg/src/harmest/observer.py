"""Parallelized second-order-generalized-integrator observer.

One rotation block per harmonic order; the stacked state follows

    d/dt x_hat = w_hat(t) * [J - l c^T] x_hat + w_hat(t) * l * y(t)
    y_hat      = c^T x_hat

where J = blockdiag(nu_i * [[0,-1],[1,0]]) and c = (1,0,1,0,...).  The gain
vector l selects the variant: blocks (nu*k, nu*g) for the two-gain design
("mSOGI"), (nu*k, 0) for the classic single-gain design ("sSOGI"), and
l = c for the adaptive-notch-filter baseline ("ANF").

Time stepping is classical fixed-step RK4.  The frequency estimate is held
constant within a step; the input is sampled at the RK4 stage times
(start, midpoint, end), which keeps the integrator's fourth-order accuracy
for the forced response.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import HarmonicSet

__all__ = [
    "VARIANT_SSOGI",
    "VARIANT_MSOGI",
    "VARIANT_ANF",
    "DivergenceError",
    "ObserverGains",
    "ObserverState",
    "rotation_matrix",
    "output_vector",
    "system_matrix",
    "derivative",
    "rk4_step",
    "step",
    "output",
    "observability_matrix",
    "DIVERGENCE_LIMIT",
]

VARIANT_SSOGI = "sSOGI"
VARIANT_MSOGI = "mSOGI"
VARIANT_ANF = "ANF"

# Any state entry beyond this magnitude (or a non-finite one) aborts a run.
DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """Observer state left the finite range; carries the failure time."""

    def __init__(self, time: float, message: str | None = None):
        super().__init__(message or f"observer state diverged at t = {time:.6g} s")
        self.time = time


def _orders_array(harmonics) -> np.ndarray:
    if isinstance(harmonics, HarmonicSet):
        return harmonics.as_array()
    return np.asarray([float(v) for v in harmonics], dtype=float)


def rotation_matrix(harmonics) -> np.ndarray:
    """Block-diagonal internal-model matrix J (skew-symmetric blocks nu_i * Jbar)."""
    orders = _orders_array(harmonics)
    n = len(orders)
    J = np.zeros((2 * n, 2 * n))
    for i, v in enumerate(orders):
        J[2 * i, 2 * i + 1] = -v
        J[2 * i + 1, 2 * i] = v
    return J


def output_vector(n: int) -> np.ndarray:
    """c = (1, 0, 1, 0, ...): sums the in-phase components."""
    c = np.zeros(2 * n)
    c[0::2] = 1.0
    return c


def system_matrix(harmonics, l) -> np.ndarray:
    """Closed-loop matrix A = J - l c^T."""
    orders = _orders_array(harmonics)
    l = np.asarray(l, dtype=float)
    return rotation_matrix(orders) - np.outer(l, output_vector(len(orders)))


class ObserverGains:
    """Per-harmonic gain pairs (k, g) stacked into the vector l.

    Block i of l is (nu_i * k_i, nu_i * g_i).  Construction checks that the
    resulting closed loop is Hurwitz (all eigenvalue real parts negative);
    pass require_hurwitz=False for deliberately marginal test setups.
    """

    def __init__(self, harmonics, k, g, variant: str, require_hurwitz: bool = True):
        if not isinstance(harmonics, HarmonicSet):
            harmonics = HarmonicSet(harmonics)
        self.harmonics = harmonics
        self.k = np.asarray(k, dtype=float)
        self.g = np.asarray(g, dtype=float)
        if self.k.shape != (harmonics.n,) or self.g.shape != (harmonics.n,):
            raise ValueError("k and g must have one entry per harmonic")
        if variant not in (VARIANT_SSOGI, VARIANT_MSOGI, VARIANT_ANF):
            raise ValueError(f"unknown observer variant {variant!r}")
        if variant in (VARIANT_SSOGI, VARIANT_ANF) and np.any(self.g != 0.0):
            raise ValueError(f"{variant} requires g = 0 for every harmonic")
        self.variant = variant
        orders = harmonics.as_array()
        self.l = np.empty(2 * harmonics.n)
        self.l[0::2] = orders * self.k
        self.l[1::2] = orders * self.g
        if variant == VARIANT_ANF:
            c = output_vector(harmonics.n)
            if np.abs(self.l - c).max() > 1e-12:
                raise ValueError("ANF requires the unit gain vector l = c")
            self.l = c  # snap away the k = 1/nu rounding residue
        if require_hurwitz:
            ev = np.linalg.eigvals(self.system_matrix())
            if ev.real.max() >= 0.0:
                raise ValueError(
                    f"gain vector is not stabilizing: max eigenvalue real part "
                    f"{ev.real.max():.3e} >= 0"
                )

    @property
    def n(self) -> int:
        return self.harmonics.n

    @property
    def orders(self) -> np.ndarray:
        return self.harmonics.as_array()

    def system_matrix(self) -> np.ndarray:
        return system_matrix(self.harmonics, self.l)

    @classmethod
    def from_l(cls, harmonics, l, variant: str, require_hurwitz: bool = True):
        if not isinstance(harmonics, HarmonicSet):
            harmonics = HarmonicSet(harmonics)
        l = np.asarray(l, dtype=float)
        orders = harmonics.as_array()
        return cls(harmonics, l[0::2] / orders, l[1::2] / orders, variant,
                   require_hurwitz=require_hurwitz)

    @classmethod
    def ssogi(cls, harmonics, l_gain: float = math.sqrt(2.0)):
        """Single-gain design with uniform l = l_gain * c (so k_i = l_gain / nu_i)."""
        if not isinstance(harmonics, HarmonicSet):
            harmonics = HarmonicSet(harmonics)
        orders = harmonics.as_array()
        return cls(harmonics, l_gain / orders, np.zeros(harmonics.n), VARIANT_SSOGI)

    @classmethod
    def anf(cls, harmonics):
        """Adaptive-notch-filter baseline: l = c."""
        if not isinstance(harmonics, HarmonicSet):
            harmonics = HarmonicSet(harmonics)
        orders = harmonics.as_array()
        return cls(harmonics, 1.0 / orders, np.zeros(harmonics.n), VARIANT_ANF)

    @classmethod
    def msogi(cls, harmonics, polespec=None, real_part: float = -1.5):
        """Two-gain design tuned by pole placement.

        Default pole set: real_part +/- j*nu_i per harmonic (normalized).
        """
        from .placement import PoleSpec, place

        if not isinstance(harmonics, HarmonicSet):
            harmonics = HarmonicSet(harmonics)
        if polespec is None:
            polespec = PoleSpec.conjugate_pairs(
                [(real_part, v) for v in harmonics.as_array()]
            )
        result = place(harmonics, polespec)
        return cls(harmonics, result.k, result.g, VARIANT_MSOGI)


@dataclass
class ObserverState:
    """Stacked estimation vector and its time stamp; a plain value."""

    x: np.ndarray
    t: float = 0.0

    @classmethod
    def zero(cls, n: int, t: float = 0.0):
        return cls(x=np.zeros(2 * n), t=t)

    def block(self, i: int):
        """In-phase/quadrature pair (y_hat_i, q_hat_i) of harmonic i."""
        return self.x[2 * i], self.x[2 * i + 1]


def derivative(state, y: float, omega_hat: float, gains: ObserverGains) -> np.ndarray:
    """Right-hand side w_hat * (A x_hat + l y) = w_hat * (J x_hat + l (y - y_hat))."""
    if omega_hat <= 0:
        raise ValueError(f"frequency estimate must be positive, got {omega_hat}")
    x = state.x if isinstance(state, ObserverState) else np.asarray(state, dtype=float)
    return _rhs(x, y, omega_hat, gains.orders, gains.l)


def _rhs(x, y, w, orders, l):
    out = np.empty_like(x)
    out[0::2] = -orders * x[1::2]
    out[1::2] = orders * x[0::2]
    out += l * (y - x[0::2].sum())
    out *= w
    return out


def rk4_step(x, y_samples, omega_hat: float, orders, l, h: float) -> np.ndarray:
    """One classical RK4 step of the observer dynamics.

    `y_samples` holds the input at the stage times (t, t + h/2, t + h);
    a scalar is accepted and held over the whole step.  The frequency
    estimate is held constant for the step.
    """
    if np.isscalar(y_samples):
        y0 = ym = y1 = float(y_samples)
    else:
        y0, ym, y1 = (float(v) for v in y_samples)
    k1 = _rhs(x, y0, omega_hat, orders, l)
    k2 = _rhs(x + 0.5 * h * k1, ym, omega_hat, orders, l)
    k3 = _rhs(x + 0.5 * h * k2, ym, omega_hat, orders, l)
    k4 = _rhs(x + h * k3, y1, omega_hat, orders, l)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: ObserverState, y_samples, omega_hat: float, gains: ObserverGains,
         h: float) -> ObserverState:
    """Advance the observer by one step; raises DivergenceError on blow-up."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    x_next = rk4_step(state.x, y_samples, omega_hat, gains.orders, gains.l, h)
    t_next = state.t + h
    if not np.all(np.isfinite(x_next)) or np.abs(x_next).max() > DIVERGENCE_LIMIT:
        raise DivergenceError(t_next)
    return ObserverState(x=x_next, t=t_next)


def output(state) -> float:
    """y_hat = c^T x_hat: sum of the in-phase components."""
    x = state.x if isinstance(state, ObserverState) else np.asarray(state, dtype=float)
    return float(x[0::2].sum())


def observability_matrix(harmonics):
    """Stacked rows c^T J^k, k = 0..2n-1, and their numerical rank.

    Full rank 2n exactly when the orders are pairwise distinct.
    """
    orders = _orders_array(harmonics)
    n = len(orders)
    J = rotation_matrix(orders)
    row = output_vector(n)
    O = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        O[k] = row
        row = row @ J
    return O, int(np.linalg.matrix_rank(O))
