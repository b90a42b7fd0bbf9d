"""Distorted single-phase test signal and its internal-model ground truth.

The signal is a sum of harmonic components

    y(t) = sum_nu a_nu(t) * cos(phi_nu(t)),   phi_nu(t) = nu * Int_0^t w(tau) dtau + phi_nu0,

with piecewise-constant amplitude/phase schedules and a piecewise-constant
fundamental angular frequency w(t).  Segments are left-closed/right-open:
a change scheduled at time s takes effect exactly at t = s.  Phase angles
accumulate continuously through frequency jumps; amplitudes and phase
offsets may jump at their segment boundaries.

The matching ground-truth state vector stacks one rotation block
(a_nu*cos(phi_nu), a_nu*sin(phi_nu)) per harmonic, so that
c^T x(t) == y(t) with c = (1, 0, 1, 0, ...).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HarmonicSet",
    "AmplitudeSegment",
    "HarmonicSchedule",
    "FrequencySchedule",
    "phase_at",
    "sample",
    "sample_components",
    "true_state",
    "LowPassFilter",
]


class HarmonicSet:
    """Ordered set of harmonic orders 1 = nu_1 < nu_2 < ... < nu_n.

    Orders are positive and pairwise distinct; the fundamental order is
    exactly 1.  Non-integer orders (inter-harmonics) are allowed.
    """

    def __init__(self, orders):
        orders = tuple(float(v) for v in orders)
        if len(orders) < 1:
            raise ValueError("at least one harmonic order is required")
        if orders[0] != 1.0:
            raise ValueError(f"first harmonic order must be exactly 1, got {orders[0]}")
        for a, b in zip(orders, orders[1:]):
            if not b > a:
                raise ValueError(f"orders must be strictly increasing, got {a} before {b}")
        if any(v <= 0 for v in orders):
            raise ValueError("all harmonic orders must be positive")
        self.orders = orders

    @property
    def n(self) -> int:
        return len(self.orders)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.orders, dtype=float)

    def __len__(self):
        return len(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def __eq__(self, other):
        return isinstance(other, HarmonicSet) and self.orders == other.orders

    def __repr__(self):
        return f"HarmonicSet({list(self.orders)})"


@dataclass(frozen=True)
class AmplitudeSegment:
    start: float
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude}")


class HarmonicSchedule:
    """Per-harmonic piecewise-constant amplitude and phase-offset schedule."""

    def __init__(self, segments_by_order):
        self.segments = {}
        for order, segs in segments_by_order.items():
            segs = [s if isinstance(s, AmplitudeSegment) else AmplitudeSegment(*s) for s in segs]
            if not segs:
                raise ValueError(f"harmonic {order}: empty segment list")
            if segs[0].start != 0.0:
                raise ValueError(f"harmonic {order}: first segment must start at t = 0")
            for a, b in zip(segs, segs[1:]):
                if not b.start > a.start:
                    raise ValueError(f"harmonic {order}: segment starts must be strictly increasing")
            self.segments[float(order)] = tuple(segs)

    def segment_at(self, order: float, t: float) -> AmplitudeSegment:
        segs = self.segments[float(order)]
        current = segs[0]
        for s in segs[1:]:
            if t >= s.start:
                current = s
            else:
                break
        return current

    def change_times(self):
        """Sorted instants (> 0) at which any harmonic's segment changes."""
        times = {s.start for segs in self.segments.values() for s in segs if s.start > 0.0}
        return sorted(times)

    @classmethod
    def constant(cls, harmonics: HarmonicSet, amplitudes, phases=None):
        phases = np.zeros(harmonics.n) if phases is None else np.asarray(phases, float)
        return cls({
            order: [AmplitudeSegment(0.0, float(a), float(p))]
            for order, a, p in zip(harmonics, amplitudes, phases)
        })


class FrequencySchedule:
    """Piecewise-constant fundamental angular frequency w(t) > 0."""

    def __init__(self, segments):
        segments = [(float(s), float(w)) for s, w in segments]
        if not segments:
            raise ValueError("frequency schedule needs at least one segment")
        if segments[0][0] != 0.0:
            raise ValueError("first frequency segment must start at t = 0")
        for (a, _), (b, _) in zip(segments, segments[1:]):
            if not b > a:
                raise ValueError("frequency segment starts must be strictly increasing")
        if any(w <= 0 for _, w in segments):
            raise ValueError("fundamental angular frequency must be positive")
        self.segments = tuple(segments)
        # Knots for the piecewise-linear phase integral Int_0^t w.
        starts = np.array([s for s, _ in segments])
        omegas = np.array([w for _, w in segments])
        cum = np.zeros(len(segments))
        for i in range(1, len(segments)):
            cum[i] = cum[i - 1] + omegas[i - 1] * (starts[i] - starts[i - 1])
        self._starts = starts
        self._omegas = omegas
        self._cum = cum

    @classmethod
    def constant(cls, omega: float):
        return cls([(0.0, omega)])

    def omega_at(self, t):
        """w(t); vectorized over t."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._starts, t, side="right") - 1
        return self._omegas[np.maximum(idx, 0)] if t.ndim else float(self._omegas[max(idx, 0)])

    def phase_integral(self, t):
        """Int_0^t w(tau) dtau; continuous, piecewise linear; vectorized."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be non-negative")
        idx = np.maximum(np.searchsorted(self._starts, t, side="right") - 1, 0)
        out = self._cum[idx] + self._omegas[idx] * (t - self._starts[idx])
        return out if out.ndim else float(out)

    def change_times(self):
        return [s for s, _ in self.segments if s > 0.0]


def phase_at(schedule: FrequencySchedule, nu: float, t, phi0: float = 0.0):
    """Harmonic phase angle nu * Int_0^t w + phi0.

    Continuous across frequency-segment boundaries; raises for t < 0.
    """
    return nu * schedule.phase_integral(t) + phi0


def sample_components(harmonics: HarmonicSet, hsched: HarmonicSchedule,
                      fsched: FrequencySchedule, t):
    """Per-harmonic values y_nu(t) = a_nu(t) cos(phi_nu(t)).

    Scalar t gives shape (n,); array t of shape (m,) gives (n, m).
    """
    t_arr = np.asarray(t, dtype=float)
    base = fsched.phase_integral(t_arr)
    out = np.empty((harmonics.n,) + t_arr.shape)
    for i, order in enumerate(harmonics):
        segs = hsched.segments[order]
        starts = np.array([s.start for s in segs])
        amps = np.array([s.amplitude for s in segs])
        phis = np.array([s.phase for s in segs])
        idx = np.maximum(np.searchsorted(starts, t_arr, side="right") - 1, 0)
        out[i] = amps[idx] * np.cos(order * base + phis[idx])
    return out


def sample(harmonics: HarmonicSet, hsched: HarmonicSchedule,
           fsched: FrequencySchedule, t):
    """Signal value y(t) = sum_nu a_nu(t) cos(phi_nu(t)); vectorized over t."""
    return sample_components(harmonics, hsched, fsched, t).sum(axis=0)


def true_state(harmonics: HarmonicSet, hsched: HarmonicSchedule,
               fsched: FrequencySchedule, t: float) -> np.ndarray:
    """Ground-truth internal-model state at time t.

    Stacked blocks (a_nu cos(phi_nu), a_nu sin(phi_nu)); satisfies
    c^T x(t) == sample(t) and d/dt x = w(t) J x on smooth segments.
    """
    base = fsched.phase_integral(float(t))
    x = np.empty(2 * harmonics.n)
    for i, order in enumerate(harmonics):
        seg = hsched.segment_at(order, t)
        ph = order * base + seg.phase
        x[2 * i] = seg.amplitude * np.cos(ph)
        x[2 * i + 1] = seg.amplitude * np.sin(ph)
    return x


class LowPassFilter:
    """First-order exponential smoothing with cut-off frequency w_lpf.

    Discretized exactly for a held input: state decays by exp(-w_lpf*h)
    between samples, giving unit DC gain.  Single-writer per stream.
    """

    def __init__(self, cutoff: float, step: float, initial: float = 0.0):
        if cutoff <= 0:
            raise ValueError(f"cut-off frequency must be positive, got {cutoff}")
        if step <= 0:
            raise ValueError(f"filter step must be positive, got {step}")
        self.cutoff = cutoff
        self.step = step
        self.alpha = 1.0 - float(np.exp(-cutoff * step))
        self.state = float(initial)

    def push(self, u: float) -> float:
        self.state += self.alpha * (u - self.state)
        return self.state

    def apply(self, samples) -> np.ndarray:
        """Filter a whole sample stream, advancing the internal state."""
        out = np.empty(len(samples))
        s = self.state
        a = self.alpha
        for i, u in enumerate(samples):
            s += a * (u - s)
            out[i] = s
        self.state = s
        return out
