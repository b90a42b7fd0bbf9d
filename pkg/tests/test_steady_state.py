import cmath
import math

import numpy as np
import pytest

from harmest.extraction import wrap_angle
from harmest.fll import lambda_vector
from harmest.observer import ObserverGains, ObserverState, step
from harmest.signals import HarmonicSet
from harmest.steady_state import (fit_sinusoid, one_period_integral_sign,
                                  responses, xi_zeta)


def complex_transfer(orders, gains, omega_hat, s):
    """Direct complex evaluation of the three transfer channels at s.

    Independent oracle: builds numerator/denominator polynomials in s from
    their definitions and evaluates with complex arithmetic (no xi/zeta
    split).  Returns a list of (Y_i, Q_i) per harmonic plus E_y.
    """
    n = len(orders)
    k, g = gains.k, gains.g
    quads = [s * s + (orders[i] * omega_hat) ** 2 for i in range(n)]
    den = np.prod(quads)
    for i in range(n):
        rest = np.prod([quads[j] for j in range(n) if j != i]) if n > 1 else 1.0
        den = den - g[i] * (orders[i] * omega_hat) ** 2 * rest \
                  + k[i] * orders[i] * omega_hat * s * rest
    out = []
    for i in range(n):
        rest = np.prod([quads[j] for j in range(n) if j != i]) if n > 1 else 1.0
        Y = (k[i] * orders[i] * omega_hat * s - g[i] * (orders[i] * omega_hat) ** 2) * rest / den
        Q = (g[i] * orders[i] * omega_hat * s + k[i] * (orders[i] * omega_hat) ** 2) * rest / den
        out.append((Y, Q))
    E = np.prod(quads) / den
    return out, E


def msogi3():
    hs = HarmonicSet([1, 2, 3])
    return hs, ObserverGains.msogi(hs)


class TestXiZeta:
    def test_zero_gains(self):
        hs = HarmonicSet([1, 2])
        gains = ObserverGains(hs, [0.0, 0.0], [0.0, 0.0], "mSOGI", require_hurwitz=False)
        omega_hat, omega = 3.0, 2.0
        xi, zeta = xi_zeta(hs, gains, omega_hat, omega)
        assert xi == 0.0
        want = (omega_hat**2 - omega**2) * ((2 * omega_hat) ** 2 - omega**2)
        assert zeta == pytest.approx(want, rel=1e-12)

    def test_resonant_substitution(self):
        hs = HarmonicSet([1])
        k1, g1 = 2.0, -1.0
        gains = ObserverGains(hs, [k1], [g1], "mSOGI")
        omega_hat = 7.0
        xi, zeta = xi_zeta(hs, gains, omega_hat, omega_hat)
        assert xi == pytest.approx(k1 * omega_hat**2, rel=1e-12)
        assert zeta == pytest.approx(-g1 * omega_hat**2, rel=1e-12)

    def test_matches_complex_denominator(self):
        rng = np.random.default_rng(4)
        hs, gains = msogi3()
        for _ in range(30):
            omega_hat = rng.uniform(100, 500)
            omega = rng.uniform(10, 1500)
            xi, zeta = xi_zeta(hs, gains, omega_hat, omega)
            _, E = complex_transfer(hs.as_array(), gains, omega_hat, 1j * omega)
            # reconstruct the denominator from the error channel: D = N_E / E
            num = np.prod([(1j * omega) ** 2 + (v * omega_hat) ** 2 for v in hs])
            den = num / E
            assert den.real == pytest.approx(zeta, rel=1e-10, abs=1e-3 * abs(zeta + 1))
            assert den.imag == pytest.approx(xi, rel=1e-10, abs=1e-3 * abs(xi + 1))

    def test_positive_frequency_estimate_required(self):
        hs, gains = msogi3()
        with pytest.raises(ValueError):
            xi_zeta(hs, gains, 0.0, 100.0)


class TestResponses:
    def test_error_gain_vanishes_at_every_resonance(self):
        hs, gains = msogi3()
        omega_hat = 2 * math.pi * 50
        for v in hs:
            r = responses(hs, gains, omega_hat, v * omega_hat, i=0)
            assert r.a_e == pytest.approx(0.0, abs=1e-12)

    def test_unity_passthrough_of_own_harmonic(self):
        hs, gains = msogi3()
        omega_hat = 2 * math.pi * 50
        for i, v in enumerate(hs):
            r = responses(hs, gains, omega_hat, v * omega_hat, i=i)
            assert r.a_y == pytest.approx(1.0, rel=1e-12)
            assert r.phi_y == pytest.approx(0.0, abs=1e-12)

    def test_matches_complex_evaluation(self):
        rng = np.random.default_rng(8)
        hs, gains = msogi3()
        for _ in range(40):
            omega_hat = rng.uniform(100, 500)
            omega = rng.uniform(10, 1800)
            tfs, E = complex_transfer(hs.as_array(), gains, omega_hat, 1j * omega)
            for i in range(hs.n):
                r = responses(hs, gains, omega_hat, omega, i)
                Y, Q = tfs[i]
                assert r.a_y == pytest.approx(abs(Y), rel=1e-9, abs=1e-15)
                assert r.a_q == pytest.approx(abs(Q), rel=1e-9, abs=1e-15)
                assert wrap_angle(r.phi_y - cmath.phase(Y)) == pytest.approx(0, abs=1e-9)
                assert wrap_angle(r.phi_q - cmath.phase(Q)) == pytest.approx(0, abs=1e-9)
            r = responses(hs, gains, omega_hat, omega, 0)
            assert r.a_e == pytest.approx(abs(E), rel=1e-9, abs=1e-15)
            assert wrap_angle(r.phi_e - cmath.phase(E)) == pytest.approx(0, abs=1e-9)


class TestOnePeriodIntegralSign:
    def test_matched_frequency_is_zero(self):
        hs, gains = msogi3()
        lam = lambda_vector(gains)
        assert one_period_integral_sign(hs, gains, lam, 100.0, 100.0) == 0

    def test_positive_for_underestimate(self):
        hs, gains = msogi3()
        lam = lambda_vector(gains)
        assert one_period_integral_sign(hs, gains, lam, 90.0, 100.0) == +1
        assert one_period_integral_sign(hs, gains, lam, 110.0, 100.0) == -1

    def test_odd_in_frequency_mismatch(self):
        hs, gains = msogi3()
        lam = lambda_vector(gains)
        omega_hat = 2 * math.pi * 50
        for d in (1.0, 5.0, 20.0):
            up = one_period_integral_sign(hs, gains, lam, omega_hat, omega_hat + d)
            dn = one_period_integral_sign(hs, gains, lam, omega_hat, omega_hat - d)
            assert up == -dn != 0


def simulate_quasi_steady(gains, omega_hat, omega, n_settle=10, n_fit=5, h=1e-4):
    """Drive the observer with cos(omega*t) at fixed omega_hat; return the
    fit window (t, per-harmonic in-phase/quadrature traces, e_y trace)."""
    hs = gains.harmonics
    period = 2 * math.pi / omega
    n_per = int(round(period / h))
    total = n_per * (n_settle + n_fit)
    st = ObserverState.zero(hs.n)
    rows_t, rows_x, rows_e = [], [], []
    for k in range(total):
        t = k * h
        if k >= n_per * n_settle:
            rows_t.append(t)
            rows_x.append(st.x.copy())
            rows_e.append(math.cos(omega * t) - st.x[0::2].sum())
        ys = (math.cos(omega * t), math.cos(omega * (t + h / 2)),
              math.cos(omega * (t + h)))
        st = step(st, ys, omega_hat, gains, h)
    return np.array(rows_t), np.array(rows_x), np.array(rows_e)


def test_simulated_gain_phase_match_closed_form():
    """Long-run simulation against the closed forms for a probe off resonance."""
    hs, gains = msogi3()
    omega_hat = 2 * math.pi * 50
    omega = 1.17 * omega_hat
    t, X, _ = simulate_quasi_steady(gains, omega_hat, omega)
    for i in range(hs.n):
        r = responses(hs, gains, omega_hat, omega, i)
        amp_y, phi_y = fit_sinusoid(t, X[:, 2 * i], omega)
        amp_q, phi_q = fit_sinusoid(t, X[:, 2 * i + 1], omega)
        assert amp_y == pytest.approx(r.a_y, rel=5e-3, abs=1e-9)
        assert amp_q == pytest.approx(r.a_q, rel=5e-3, abs=1e-9)
        assert abs(wrap_angle(phi_y - r.phi_y)) < 0.01
        assert abs(wrap_angle(phi_q - r.phi_q)) < 0.01


def test_lambda_choice_aligns_adaption_signal_with_error_phase():
    """With the rotated-gain selection vector, the steady-state adaption
    signal lambda^T x_hat is exactly collinear with the error channel:
    in phase for an underestimated frequency (omega > omega_hat) and in
    anti-phase for an overestimate.  Collinearity maximizes the magnitude
    of the per-period product and fixes its sign.
    """
    hs, gains = msogi3()
    lam = lambda_vector(gains)
    omega_hat = 2 * math.pi * 50
    for factor in (0.93, 1.08):
        omega = factor * omega_hat
        t, X, _ = simulate_quasi_steady(gains, omega_hat, omega)
        r = responses(hs, gains, omega_hat, omega, 0)
        _, phi_sig = fit_sinusoid(t, X @ lam, omega)
        diff = wrap_angle(phi_sig - r.phi_e)
        if omega > omega_hat:
            assert abs(diff) < 0.01
        else:
            assert abs(abs(diff) - math.pi) < 0.01


def test_sign_prediction_matches_simulation_small_grid():
    """Trapezoidal one-period integral of e_y * lambda^T x_hat agrees in
    sign with the closed form on a 3x3 grid away from the diagonal."""
    hs = HarmonicSet([1])
    gains = ObserverGains(hs, [2.0], [-1.0], "mSOGI")
    lam = lambda_vector(gains)
    freqs = 2 * math.pi * np.array([46.0, 50.0, 54.0])
    h = 1e-4
    for omega in freqs:
        for omega_hat in freqs:
            if omega == omega_hat:
                continue
            t, X, e = simulate_quasi_steady(gains, omega_hat, omega, h=h)
            period = 2 * math.pi / omega
            m = t <= t[0] + period
            integral = np.trapezoid((e * (X @ lam))[m], t[m])
            predicted = one_period_integral_sign(hs, gains, lam, omega_hat, omega)
            assert predicted != 0
            assert math.copysign(1, integral) == predicted


def test_degenerate_denominator_reported():
    hs = HarmonicSet([1])
    gains = ObserverGains(hs, [2.0], [0.0], "mSOGI")
    # zero gains cannot produce a zero denominator off resonance; force the
    # degenerate case with g such that zeta = xi = 0 is unreachable -> use
    # the unstable zero-gain system at exact resonance instead
    zero = ObserverGains(hs, [0.0], [0.0], "mSOGI", require_hurwitz=False)
    with pytest.raises(ZeroDivisionError):
        responses(hs, zero, 100.0, 100.0, 0)
    # sane configuration: no error
    responses(hs, gains, 100.0, 100.0, 0)
