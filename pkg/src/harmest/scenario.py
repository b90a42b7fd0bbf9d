"""Scenario configuration, simulation driver, metrics, and CSV export.

A scenario bundles the signal schedules, the observer variant (gains or a
pole set resolved through the analytic placement), the frequency-loop
variant and tuning, and the integration settings.  Scenario files are YAML
documents; see `parse_scenario` for the schema and `preset` for the
built-in experiment configurations.

The per-step wiring is: sample the input (plus optional noise and low-pass
filter), log the row, advance the observer one RK4 step holding the
current frequency estimate, then update the estimate by one explicit-Euler
step of the frequency loop using the same instant's error and state.  With
the loop disabled the estimate tracks the scheduled frequency exactly.
Runs are deterministic given the scenario (including the seed).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import _core
from .extraction import EventMetrics, RunMetrics, settling_time, wrap_angle
from .fll import FLL_VARIANTS, MFLL, SFLL_GN, SFLL_PLAIN, FllConfig, FllState, lambda_vector
from .observer import (DIVERGENCE_LIMIT, VARIANT_ANF, VARIANT_MSOGI, VARIANT_SSOGI,
                       ObserverGains)
from .placement import PoleSpec, place
from .signals import (FrequencySchedule, HarmonicSchedule, HarmonicSet, LowPassFilter,
                      sample, sample_components)

__all__ = [
    "ScenarioError",
    "SimulationDiverged",
    "Scenario",
    "Trace",
    "parse_scenario",
    "load_scenario",
    "preset",
    "PRESET_NAMES",
    "run",
    "compare",
    "ComparisonResult",
    "export",
    "write_trace_csv",
    "read_trace_csv",
    "write_metrics",
]

# Settling band as a fraction of the fundamental amplitude at the event.
DEFAULT_EPS_RATIO = 0.02
# Frequency considered settled within this fraction of the true value.
DEFAULT_FREQ_TOL = 0.01
# Tail fraction of each event window used for steady-state error averages.
STEADY_STATE_FRACTION = 0.2


class ScenarioError(ValueError):
    """Configuration problem; message names the offending field."""


class SimulationDiverged(RuntimeError):
    """Observer state blew up; carries the failure time and partial trace."""

    def __init__(self, time: float, trace: "Trace"):
        super().__init__(f"simulation diverged at t = {time:.6g} s")
        self.time = time
        self.trace = trace


@dataclass
class Scenario:
    name: str
    harmonics: HarmonicSet
    hsched: HarmonicSchedule
    fsched: FrequencySchedule
    duration: float
    step: float
    gains: ObserverGains
    fll_variant: str | None = None          # None: estimate follows the schedule
    fll_gamma: float = 60.0
    fll_epsilon: float = 0.1
    fll_omega_min: float = 39.0
    fll_omega_max: float = 61.0
    fll_rate_max: float = 2.0 * math.pi * 1e4
    fll_rate_min: float = -2.0 * math.pi * 1e4
    omega0: float | None = None
    log_every: int = 1
    seed: int = 0
    noise_amp: float = 0.0
    lpf_cutoff: float | None = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError(f"sim.duration_s must be positive, got {self.duration}")
        if self.step <= 0:
            raise ScenarioError(f"sim.step_s must be positive, got {self.step}")
        steps = self.duration / self.step
        if steps > 2**53:
            raise ScenarioError("sim.duration_s / sim.step_s does not fit a machine integer")
        if self.log_every < 1:
            raise ScenarioError(f"sim.log_every must be >= 1, got {self.log_every}")
        if self.fll_variant is not None and self.fll_variant not in FLL_VARIANTS:
            raise ScenarioError(f"fll.variant must be one of {FLL_VARIANTS} or 'off'")
        if self.fll_variant is not None and self.omega0 is None:
            raise ScenarioError("fll.omega0 is required when the frequency loop is active")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.step))

    def fll_config(self) -> FllConfig | None:
        if self.fll_variant is None:
            return None
        return FllConfig.for_gains(
            self.gains, gamma=self.fll_gamma, epsilon=self.fll_epsilon,
            omega_min=self.fll_omega_min, omega_max=self.fll_omega_max,
            rate_min=self.fll_rate_min, rate_max=self.fll_rate_max,
            variant=self.fll_variant,
        )

    def event_times(self):
        """Schedule-change instants (always including t = 0) inside the run."""
        times = {0.0}
        times.update(t for t in self.hsched.change_times() if t < self.duration)
        times.update(t for t in self.fsched.change_times() if t < self.duration)
        return sorted(times)


class Trace:
    """Columnar simulation log.

    Scalar columns: t, y, yhat, e_y, omega_hat.  Per-harmonic columns
    (arrays of shape (rows, n)): yh, qh, ah, ph, e.  The phase column holds
    NaN where the block is exactly zero (no defined phase).
    """

    SCALARS = ("t", "y", "yhat", "e_y", "omega_hat")
    PER_HARMONIC = ("yhat", "qhat", "ahat", "phihat", "e")

    def __init__(self, t, y, yhat, e_y, omega_hat, yh, qh, ah, ph, e, orders=None):
        self.t = t
        self.y = y
        self.yhat = yhat
        self.e_y = e_y
        self.omega_hat = omega_hat
        self.yh = yh
        self.qh = qh
        self.ah = ah
        self.ph = ph
        self.e = e
        self.orders = orders

    @property
    def n(self) -> int:
        return self.yh.shape[1]

    def __len__(self):
        return len(self.t)

    def _harmonic_arrays(self):
        return dict(zip(self.PER_HARMONIC, (self.yh, self.qh, self.ah, self.ph, self.e)))

    def header(self):
        cols = list(self.SCALARS)
        for i in range(1, self.n + 1):
            cols += [f"{stem}_{i}" for stem in self.PER_HARMONIC]
        return cols

    def columns(self):
        """Yield (name, 1-d array) in CSV order."""
        for name in self.SCALARS:
            yield name, getattr(self, name)
        arrays = self._harmonic_arrays()
        for i in range(self.n):
            for stem in self.PER_HARMONIC:
                yield f"{stem}_{i + 1}", arrays[stem][:, i]

    def equals(self, other: "Trace") -> bool:
        mine = dict(self.columns())
        theirs = dict(other.columns())
        if mine.keys() != theirs.keys():
            return False
        return all(np.array_equal(mine[k], theirs[k], equal_nan=True) for k in mine)


# ---------------------------------------------------------------------------
# configuration parsing

def _require(mapping, key, context):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(f"missing required field '{context}.{key}'"
                            if context else f"missing required field '{key}'")
    return mapping[key]


def _number(value, context):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"field '{context}' must be a number, got {value!r}")
    return float(value)


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate a YAML scenario document.

    Schema (all angles in rad, times in s, frequencies as noted)::

        harmonics:              # one entry per order, fundamental first
          - order: 1
            segments:           # piecewise-constant, first start_s = 0
              - {start_s: 0.0, amplitude: 325.0, phase_rad: 0.0}
        frequency:              # fundamental frequency segments, in Hz
          - {start_s: 0.0, hz: 50.0}
        observer:
          variant: mSOGI        # mSOGI | sSOGI | ANF
          poles: [[-1.5, 1.0], ...]   # mSOGI: n conjugate pairs (re, im)
          # or gains: [[k, g], ...];  sSOGI accepts l_gain (default sqrt(2))
        fll:
          variant: mFLL         # mFLL | sFLL-GN | sFLL-plain | off
          gamma: 60.0
          epsilon: 0.1
          omega_min: 245.04     # rad/s
          omega_max: 383.27
          rate_min: -62831.85   # rad/s^2
          rate_max: 62831.85
          omega0: 200.0         # rad/s
        sim:
          duration_s: 0.8
          step_s: 1.0e-4
          log_every: 1
          seed: 0
          noise_amp: 0.0        # uniform +/- amplitude, 0 disables
          lpf_rad_s: 0          # low-pass cut-off, 0/absent disables
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not a valid YAML document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")

    raw_harm = _require(doc, "harmonics", "")
    if not isinstance(raw_harm, list) or not raw_harm:
        raise ScenarioError("field 'harmonics' must be a non-empty list")
    orders = []
    segments = {}
    for j, entry in enumerate(raw_harm):
        ctx = f"harmonics[{j}]"
        order = _number(_require(entry, "order", ctx), f"{ctx}.order")
        segs = _require(entry, "segments", ctx)
        if not isinstance(segs, list) or not segs:
            raise ScenarioError(f"field '{ctx}.segments' must be a non-empty list")
        parsed = []
        for m, seg in enumerate(segs):
            sctx = f"{ctx}.segments[{m}]"
            parsed.append((
                _number(_require(seg, "start_s", sctx), f"{sctx}.start_s"),
                _number(_require(seg, "amplitude", sctx), f"{sctx}.amplitude"),
                _number(seg.get("phase_rad", 0.0), f"{sctx}.phase_rad"),
            ))
        orders.append(order)
        segments[order] = parsed
    try:
        harmonics = HarmonicSet(orders)
        hsched = HarmonicSchedule(segments)
    except ValueError as exc:
        raise ScenarioError(f"harmonics: {exc}") from exc

    raw_freq = _require(doc, "frequency", "")
    if not isinstance(raw_freq, list) or not raw_freq:
        raise ScenarioError("field 'frequency' must be a non-empty list")
    try:
        fsched = FrequencySchedule([
            (_number(_require(seg, "start_s", f"frequency[{m}]"), f"frequency[{m}].start_s"),
             2.0 * math.pi * _number(_require(seg, "hz", f"frequency[{m}]"),
                                     f"frequency[{m}].hz"))
            for m, seg in enumerate(raw_freq)
        ])
    except ValueError as exc:
        raise ScenarioError(f"frequency: {exc}") from exc

    raw_obs = _require(doc, "observer", "")
    variant = _require(raw_obs, "variant", "observer")
    try:
        if variant == VARIANT_MSOGI:
            if "gains" in raw_obs:
                pairs = raw_obs["gains"]
                k = [_number(p[0], "observer.gains") for p in pairs]
                g = [_number(p[1], "observer.gains") for p in pairs]
                gains = ObserverGains(harmonics, k, g, VARIANT_MSOGI)
            else:
                pairs = raw_obs.get("poles")
                if pairs is None:
                    spec = None
                else:
                    if len(pairs) != harmonics.n:
                        raise ScenarioError(
                            f"observer.poles needs {harmonics.n} conjugate pairs, "
                            f"got {len(pairs)}")
                    spec = PoleSpec.conjugate_pairs(
                        [(_number(p[0], "observer.poles"), _number(p[1], "observer.poles"))
                         for p in pairs])
                gains = ObserverGains.msogi(harmonics, spec)
        elif variant == VARIANT_SSOGI:
            gains = ObserverGains.ssogi(
                harmonics, l_gain=_number(raw_obs.get("l_gain", math.sqrt(2.0)),
                                          "observer.l_gain"))
        elif variant == VARIANT_ANF:
            gains = ObserverGains.anf(harmonics)
        else:
            raise ScenarioError(
                f"observer.variant must be one of "
                f"({VARIANT_MSOGI}, {VARIANT_SSOGI}, {VARIANT_ANF}), got {variant!r}")
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"observer: {exc}") from exc

    raw_fll = doc.get("fll") or {"variant": "off"}
    fll_variant = raw_fll.get("variant", "off")
    if fll_variant == "off":
        fll_variant = None
    raw_sim = _require(doc, "sim", "")

    try:
        scenario = Scenario(
            name=name,
            harmonics=harmonics,
            hsched=hsched,
            fsched=fsched,
            duration=_number(_require(raw_sim, "duration_s", "sim"), "sim.duration_s"),
            step=_number(_require(raw_sim, "step_s", "sim"), "sim.step_s"),
            gains=gains,
            fll_variant=fll_variant,
            fll_gamma=_number(raw_fll.get("gamma", 60.0), "fll.gamma"),
            fll_epsilon=_number(raw_fll.get("epsilon", 0.1), "fll.epsilon"),
            fll_omega_min=_number(raw_fll.get("omega_min", 39.0), "fll.omega_min"),
            fll_omega_max=_number(raw_fll.get("omega_max", 61.0), "fll.omega_max"),
            fll_rate_min=_number(raw_fll.get("rate_min", -2e4 * math.pi), "fll.rate_min"),
            fll_rate_max=_number(raw_fll.get("rate_max", 2e4 * math.pi), "fll.rate_max"),
            omega0=(None if raw_fll.get("omega0") is None
                    else _number(raw_fll["omega0"], "fll.omega0")),
            log_every=int(raw_sim.get("log_every", 1)),
            seed=int(raw_sim.get("seed", 0)),
            noise_amp=_number(raw_sim.get("noise_amp", 0.0), "sim.noise_amp"),
            lpf_cutoff=(None if not raw_sim.get("lpf_rad_s")
                        else _number(raw_sim["lpf_rad_s"], "sim.lpf_rad_s")),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), name=str(path))


# ---------------------------------------------------------------------------
# built-in presets (reconstruction of the published experiment schedules)

# The published amplitude table is not machine-readable, so the presets use
# a documented stand-in: fundamental amplitude 325 with per-event scaling,
# harmonics 2..10 at descending fractions that are cyclically permuted (and
# phase-shifted) at each event.  Event and frequency values follow the
# published scenarios: amplitude events at 0.2/0.4/0.6 s with a constant
# 50 Hz fundamental (S1-style), frequency jumps 50->60 Hz at 0.2 s and
# 60->40 Hz at 0.6 s with amplitude events at 0.4/0.6 s (S2-style).
_BASE_AMPLITUDE = 325.0
_HARMONIC_FRACTIONS = (0.30, 0.25, 0.20, 0.15, 0.12, 0.10, 0.08, 0.06, 0.05)
_FUNDAMENTAL_SCALE = (1.0, 0.6, 1.25, 0.8)
_PHASE_STEP = 0.9

PRESET_NAMES = ("s1-msogi", "s1-ssogi", "s1-anf", "s2-msogi", "s2-ssogi", "s2-anf")


def _preset_schedule(event_times):
    """Amplitude/phase schedule with a fundamental jump at every event."""
    harmonics = HarmonicSet(range(1, 11))
    starts = [0.0] + list(event_times)
    segments = {}
    for i, order in enumerate(harmonics):
        segs = []
        for e, start in enumerate(starts):
            if i == 0:
                amp = _BASE_AMPLITUDE * _FUNDAMENTAL_SCALE[e % len(_FUNDAMENTAL_SCALE)]
            else:
                fracs = np.roll(_HARMONIC_FRACTIONS, e)
                amp = _BASE_AMPLITUDE * fracs[i - 1]
            segs.append((start, float(amp), ((i + 1) * _PHASE_STEP * e) % (2.0 * math.pi)))
        segments[float(order)] = segs
    return harmonics, HarmonicSchedule(segments)


def _preset_gains(harmonics, kind: str) -> ObserverGains:
    if kind == "msogi":
        return ObserverGains.msogi(harmonics)  # poles -3/2 +/- j*nu
    if kind == "ssogi":
        return ObserverGains.ssogi(harmonics)  # l = sqrt(2) c
    if kind == "anf":
        return ObserverGains.anf(harmonics)    # l = c
    raise ScenarioError(f"unknown observer kind {kind!r}")


def preset(name: str) -> Scenario:
    """Built-in scenario by name; see PRESET_NAMES."""
    if name not in PRESET_NAMES:
        raise ScenarioError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    family, kind = name.split("-")
    if family == "s1":
        harmonics, hsched = _preset_schedule([0.2, 0.4, 0.6])
        fsched = FrequencySchedule.constant(2.0 * math.pi * 50.0)
        return Scenario(
            name=name, harmonics=harmonics, hsched=hsched, fsched=fsched,
            duration=0.8, step=1e-4, gains=_preset_gains(harmonics, kind),
            fll_variant=None,
        )
    harmonics, hsched = _preset_schedule([0.4, 0.6])
    fsched = FrequencySchedule([
        (0.0, 2.0 * math.pi * 50.0),
        (0.2, 2.0 * math.pi * 60.0),
        (0.6, 2.0 * math.pi * 40.0),
    ])
    common = dict(name=name, harmonics=harmonics, hsched=hsched, fsched=fsched,
                  duration=0.8, step=1e-4, gains=_preset_gains(harmonics, kind),
                  omega0=200.0,
                  fll_omega_min=2.0 * math.pi * 39.0,
                  fll_omega_max=2.0 * math.pi * 61.0)
    if kind == "msogi":
        return Scenario(fll_variant=MFLL, fll_gamma=60.0, fll_epsilon=0.1, **common)
    if kind == "ssogi":
        return Scenario(fll_variant=SFLL_GN, fll_gamma=46.0, fll_epsilon=0.1, **common)
    # Plain constant-gain loop: without gain normalization the adaption rate
    # scales with the squared signal amplitude, so the gain is tuned for the
    # reconstruction amplitudes (tracks each frequency segment, no blow-up).
    return Scenario(fll_variant=SFLL_PLAIN, fll_gamma=0.06, **common)


# ---------------------------------------------------------------------------
# simulation driver

def _fll_mode(variant):
    return {None: 0, MFLL: 1, SFLL_GN: 2, SFLL_PLAIN: 3}[variant]


def run(scenario: Scenario, eps_ratio: float = DEFAULT_EPS_RATIO,
        freq_tol: float = DEFAULT_FREQ_TOL):
    """Simulate one scenario; returns (Trace, RunMetrics).

    Raises SimulationDiverged (with the partial trace attached) when the
    observer state leaves the finite range, e.g. after the plain frequency
    loop drives the estimate negative.
    """
    sc = scenario
    N = sc.n_steps
    h = sc.step
    t_half = np.arange(2 * N + 1) * (h / 2.0)
    y_half = sample(sc.harmonics, sc.hsched, sc.fsched, t_half)
    if sc.noise_amp > 0.0:
        rng = np.random.default_rng(sc.seed)
        y_half = y_half + rng.uniform(-sc.noise_amp, sc.noise_amp, y_half.shape)
    if sc.lpf_cutoff is not None:
        y_half = LowPassFilter(sc.lpf_cutoff, h / 2.0).apply(y_half)

    mode = _fll_mode(sc.fll_variant)
    if mode == 0:
        omega_ext = np.asarray(sc.fsched.omega_at(np.arange(N + 1) * h))
        omega0 = omega_ext[0]
        lam = np.zeros(2 * sc.harmonics.n)
        lo = hi = 0.0
        cfg = None
    else:
        cfg = sc.fll_config()
        state0 = FllState.initial(cfg, sc.omega0)
        omega_ext = np.zeros(1)
        omega0 = sc.omega0
        lam = cfg.lam
        lo, hi = state0.lo, state0.hi

    status, fail_step, ks, x_log, omega_log = _core.run_loop(
        sc.harmonics.as_array(), sc.gains.l, lam, y_half, omega_ext,
        np.zeros(2 * sc.harmonics.n), h, mode,
        sc.fll_gamma, sc.fll_epsilon, sc.fll_omega_min, sc.fll_omega_max,
        sc.fll_rate_min, sc.fll_rate_max, lo, hi, omega0,
        sc.log_every, DIVERGENCE_LIMIT,
    )
    trace = _build_trace(sc, ks, x_log, omega_log, y_half)
    if status != 0:
        raise SimulationDiverged(fail_step * h, trace)
    metrics = _compute_metrics(sc, trace, eps_ratio, freq_tol)
    return trace, metrics


def _build_trace(sc: Scenario, ks, x_log, omega_log, y_half) -> Trace:
    t = ks * sc.step
    y = y_half[2 * ks]
    yh = x_log[:, 0::2]
    qh = x_log[:, 1::2]
    yhat = yh.sum(axis=1)
    e_y = y - yhat
    ah = np.hypot(yh, qh)
    with np.errstate(invalid="ignore"):
        ph = np.arctan2(qh, yh)
        ph[ph == -np.pi] = np.pi
    ph = np.where(ah > 0.0, ph, np.nan)
    y_true = sample_components(sc.harmonics, sc.hsched, sc.fsched, t).T
    e = y_true - yh
    return Trace(t=t, y=y, yhat=yhat, e_y=e_y, omega_hat=omega_log,
                 yh=yh, qh=qh, ah=ah, ph=ph, e=e,
                 orders=sc.harmonics.as_array())


def _compute_metrics(sc: Scenario, trace: Trace, eps_ratio, freq_tol) -> RunMetrics:
    events = sc.event_times()
    bounds = events[1:] + [sc.duration]
    metrics = RunMetrics()
    base = sc.fsched.phase_integral(trace.t)
    for t0, t1 in zip(events, bounds):
        # Left-closed windows: the sample at the next event time already
        # sees the new schedule, so it belongs to the next window.  The
        # final window keeps its end sample (t = duration, no jump there).
        if t1 >= sc.duration:
            m = (trace.t >= t0) & (trace.t <= t1)
        else:
            m = (trace.t >= t0) & (trace.t < t1)
        tt = trace.t[m]
        a1 = sc.hsched.segment_at(1.0, t0).amplitude
        eps_y = eps_ratio * a1
        settle = settling_time(tt, trace.e_y[m], t0, eps_y)
        per_harm = [settling_time(tt, trace.e[m][:, i], t0, eps_y)
                    for i in range(trace.n)]
        omega_true = sc.fsched.omega_at(t0)
        freq_err = np.abs(trace.omega_hat[m] - omega_true)
        freq_settle = settling_time(tt, freq_err, t0, freq_tol * omega_true)
        tail = tt >= t1 - STEADY_STATE_FRACTION * (t1 - t0)
        amp_err, phase_err = [], []
        for i, order in enumerate(sc.harmonics):
            seg = sc.hsched.segment_at(order, t0)
            amp_err.append(float(np.mean(np.abs(trace.ah[m][tail, i] - seg.amplitude))))
            if seg.amplitude > 0.0:
                true_phase = order * base[m][tail] + seg.phase
                est = trace.ph[m][tail, i]
                diff = wrap_angle(est - true_phase)
                phase_err.append(float(np.mean(np.abs(diff))))
            else:
                phase_err.append(float("nan"))
        metrics.events.append(EventMetrics(
            t_event=t0, t_end=t1, eps_y=eps_y,
            settling_s=None if settle is None else settle - t0,
            freq_settling_s=None if freq_settle is None else freq_settle - t0,
            harmonic_settling_s=[None if s is None else s - t0 for s in per_harm],
            amp_error=amp_err, phase_error=phase_err,
        ))
    return metrics


# ---------------------------------------------------------------------------
# comparison across observer variants

@dataclass
class ComparisonResult:
    labels: list
    event_times: list
    settling: dict = field(default_factory=dict)       # label -> [s or None]
    fundamental: dict = field(default_factory=dict)    # label -> [s or None]
    ranking: list = field(default_factory=list)        # per event: labels fastest-first

    def to_text(self) -> str:
        out = io.StringIO()
        header = f"{'event [s]':>10} | " + " | ".join(f"{lab:>18}" for lab in self.labels)
        out.write(header + "\n")
        out.write("-" * len(header) + "\n")

        def fmt(v):
            return "   unsettled" if v is None else f"{v * 1e3:9.2f} ms"

        for j, te in enumerate(self.event_times):
            row = [fmt(self.settling[lab][j]) for lab in self.labels]
            out.write(f"{te:>10.3f} | " + " | ".join(f"{r:>18}" for r in row) + "\n")
            fund = [fmt(self.fundamental[lab][j]) for lab in self.labels]
            out.write(f"{'(e_1)':>10} | " + " | ".join(f"{r:>18}" for r in fund) + "\n")
        if self.ranking:
            out.write("\nranking per event (fundamental settling, fastest first):\n")
            for te, order in zip(self.event_times, self.ranking):
                out.write(f"  t = {te:.3f} s: {' < '.join(order)}\n")
        return out.getvalue()

    def to_csv(self) -> str:
        lines = ["event_s,label,settling_s,fundamental_settling_s"]
        for j, te in enumerate(self.event_times):
            for lab in self.labels:
                s = self.settling[lab][j]
                f = self.fundamental[lab][j]
                lines.append(f"{_fmt(te)},{lab},{'' if s is None else _fmt(s)},"
                             f"{'' if f is None else _fmt(f)}")
        return "\n".join(lines) + "\n"


def compare(scenarios, eps_ratio: float = DEFAULT_EPS_RATIO) -> ComparisonResult:
    """Run several scenarios over the same signal and align their metrics.

    All scenarios must share the harmonic set, schedules, duration and step
    (they differ in observer/loop variant); raises ScenarioError otherwise.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ScenarioError("compare needs at least one scenario")
    ref = scenarios[0]
    for sc in scenarios[1:]:
        same = (sc.harmonics == ref.harmonics
                and sc.hsched.segments == ref.hsched.segments
                and sc.fsched.segments == ref.fsched.segments
                and sc.duration == ref.duration and sc.step == ref.step)
        if not same:
            raise ScenarioError(
                f"scenario '{sc.name}' does not share the signal schedule of "
                f"'{ref.name}'; comparison would be meaningless")
    labels = []
    for sc in scenarios:
        label = sc.name
        while label in labels:
            label += "'"
        labels.append(label)
    result = ComparisonResult(labels=labels, event_times=ref.event_times())
    for label, sc in zip(labels, scenarios):
        _, metrics = run(sc, eps_ratio=eps_ratio)
        result.settling[label] = metrics.settling_by_event()
        result.fundamental[label] = metrics.fundamental_settling_by_event()
    if len(labels) > 1:
        for j in range(len(result.event_times)):
            def key(lab):
                v = result.fundamental[lab][j]
                return (v is None, v)
            result.ranking.append(sorted(labels, key=key))
    return result


# ---------------------------------------------------------------------------
# export

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace_csv(trace: Trace, fh) -> None:
    """Fixed-header CSV, '.' decimal point, 17 significant digits."""
    cols = list(trace.columns())
    fh.write(",".join(name for name, _ in cols) + "\n")
    arrays = [arr for _, arr in cols]
    for row in zip(*arrays):
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_trace_csv(fh) -> Trace:
    """Parse a trace CSV back into arrays (inverse of write_trace_csv)."""
    header = fh.readline().strip().split(",")
    n = (len(header) - len(Trace.SCALARS)) // 5
    body = fh.read().strip()
    if body:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        data = np.empty((0, len(header)))
    cols = {name: data[:, j] for j, name in enumerate(header)}

    def stack(stem):
        if n == 0:
            return np.empty((data.shape[0], 0))
        return np.column_stack([cols[f"{stem}_{i + 1}"] for i in range(n)])

    return Trace(t=cols["t"], y=cols["y"], yhat=cols["yhat"], e_y=cols["e_y"],
                 omega_hat=cols["omega_hat"], yh=stack("yhat"), qh=stack("qhat"),
                 ah=stack("ahat"), ph=stack("phihat"), e=stack("e"))


def write_metrics(metrics: RunMetrics, fh) -> None:
    """Structured-text (YAML) metrics summary; stable key order."""
    yaml.safe_dump(metrics.to_dict(), fh, sort_keys=False)


def export(trace: Trace, metrics: RunMetrics | None, csv_path=None, metrics_path=None):
    """Write the trace CSV and/or the metrics summary; returns written paths."""
    written = []
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            write_trace_csv(trace, fh)
        written.append(csv_path)
    if metrics_path is not None and metrics is not None:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            write_metrics(metrics, fh)
        written.append(metrics_path)
    return written
