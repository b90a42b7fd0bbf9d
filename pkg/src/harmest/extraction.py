"""Amplitude/phase extraction from observer blocks and run metrics.

Each observer block (y_hat_nu, q_hat_nu) encodes the estimate
a_nu * (cos phi_nu, sin phi_nu), so

    a_hat_nu   = sqrt(y_hat_nu^2 + q_hat_nu^2)
    phi_hat_nu = arctan2(y_hat_nu, q_hat_nu)

with the two-argument arctangent taking the cosine-like component first
and returning values in (-pi, pi].  A zero block has amplitude 0 and no
defined phase (reported as None rather than an arbitrary angle).

Settling time uses the suffix criterion: the smallest instant after which
the error stays inside the band through the end of the evaluation window,
not the first band entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "arctan2",
    "wrap_angle",
    "HarmonicEstimate",
    "extract",
    "settling_time",
    "EventMetrics",
    "RunMetrics",
]


def arctan2(x: float, y: float) -> float:
    """Two-argument arctangent with range (-pi, pi].

    The first argument plays the cosine role and the second the sine role,
    i.e. arctan2(a*cos(p), a*sin(p)) == wrap(p) for a > 0.  The boundary
    case x < 0, y == 0 maps to +pi so the range is exactly (-pi, pi].
    Raises for (0, 0).
    """
    if x == 0.0 and y == 0.0:
        raise ValueError("arctan2 is undefined at (0, 0)")
    out = math.atan2(y, x)
    return math.pi if out == -math.pi else out


def wrap_angle(angle: float) -> float:
    """Wrap an angle (or array) into (-pi, pi]."""
    wrapped = -np.remainder(-np.asarray(angle) + np.pi, 2.0 * np.pi) + np.pi
    return float(wrapped) if np.isscalar(angle) else wrapped


@dataclass(frozen=True)
class HarmonicEstimate:
    order: float
    amplitude: float
    phase: float | None
    y: float
    q: float


def extract(state, harmonics) -> list[HarmonicEstimate]:
    """Per-harmonic amplitude/phase estimates from the stacked state."""
    x = np.asarray(getattr(state, "x", state), dtype=float)
    orders = list(harmonics)
    if x.shape != (2 * len(orders),):
        raise ValueError(f"state length {x.shape} does not match {len(orders)} harmonics")
    out = []
    for i, order in enumerate(orders):
        yv, qv = float(x[2 * i]), float(x[2 * i + 1])
        amp = math.hypot(yv, qv)
        phase = arctan2(yv, qv) if amp > 0.0 else None
        out.append(HarmonicEstimate(order=order, amplitude=amp, phase=phase, y=yv, q=qv))
    return out


def settling_time(t, e, t0: float, eps: float) -> float | None:
    """Smallest t* >= t0 with |e(tau)| <= eps for all tau in [t*, end of trace].

    Returns None when the error still exceeds the band at the window end.
    Raises on an empty trace or when the trace does not cover t0.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if t.size == 0:
        raise ValueError("empty error trace")
    if t[-1] < t0:
        raise ValueError(f"trace ends at {t[-1]} before the event time {t0}")
    m = t >= t0
    tt = t[m]
    bad = np.flatnonzero(np.abs(e[m]) > eps)
    if bad.size == 0:
        return float(t0)
    if bad[-1] + 1 >= tt.size:
        return None
    return float(tt[bad[-1] + 1])


@dataclass
class EventMetrics:
    """Estimation quality over one schedule-change window [t_event, t_end)."""

    t_event: float
    t_end: float
    eps_y: float
    settling_s: float | None
    freq_settling_s: float | None
    harmonic_settling_s: list = field(default_factory=list)
    amp_error: list = field(default_factory=list)
    phase_error: list = field(default_factory=list)

    def to_dict(self):
        return {
            "t_event": self.t_event,
            "t_end": self.t_end,
            "eps_y": self.eps_y,
            "settling_s": self.settling_s,
            "freq_settling_s": self.freq_settling_s,
            "harmonic_settling_s": list(self.harmonic_settling_s),
            "amp_error": list(self.amp_error),
            "phase_error": list(self.phase_error),
        }


@dataclass
class RunMetrics:
    """Per-event metrics for one simulation run."""

    events: list[EventMetrics] = field(default_factory=list)

    def to_dict(self):
        return {"events": [e.to_dict() for e in self.events]}

    def settling_by_event(self):
        return [e.settling_s for e in self.events]

    def fundamental_settling_by_event(self):
        return [e.harmonic_settling_s[0] if e.harmonic_settling_s else None
                for e in self.events]
