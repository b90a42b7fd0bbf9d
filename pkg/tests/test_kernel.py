import math

import numpy as np
import pytest

from harmest._core import available_backends
from harmest.fll import FllConfig, FllState, fll_step, lambda_vector
from harmest.observer import ObserverGains, ObserverState, step
from harmest.signals import HarmonicSet


def half_grid_cosine(omega, h, N):
    t = np.arange(2 * N + 1) * (h / 2.0)
    return np.cos(omega * t)


def make_setup(n_steps=400):
    hs = HarmonicSet([1, 2, 3])
    gains = ObserverGains.msogi(hs)
    omega = 2 * math.pi * 50
    h = 1e-4
    y = half_grid_cosine(omega, h, n_steps)
    return hs, gains, omega, h, y


def test_external_frequency_mode_matches_public_step(backend):
    hs, gains, omega, h, y = make_setup()
    N = (len(y) - 1) // 2
    omega_ext = np.full(N + 1, omega)
    status, _, ks, x_log, omega_log = backend(
        hs.as_array(), gains.l, np.zeros(6), y, omega_ext, np.zeros(6), h,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1e12)
    assert status == 0
    assert len(ks) == N + 1
    st = ObserverState.zero(3)
    for k in range(N):
        np.testing.assert_allclose(x_log[k], st.x, atol=1e-12)
        st = step(st, (y[2 * k], y[2 * k + 1], y[2 * k + 2]), omega, gains, h)
    np.testing.assert_allclose(x_log[N], st.x, atol=1e-12)
    assert np.all(omega_log == omega)


def test_coupled_mode_matches_public_fll_step(backend):
    hs, gains, omega, h, y = make_setup()
    N = (len(y) - 1) // 2
    cfg = FllConfig.for_gains(gains, gamma=60.0, epsilon=0.1,
                              omega_min=2 * math.pi * 39, omega_max=2 * math.pi * 61,
                              rate_min=-2e4 * math.pi, rate_max=2e4 * math.pi)
    omega0 = 250.0
    fst = FllState.initial(cfg, omega0)
    status, _, ks, x_log, omega_log = backend(
        hs.as_array(), gains.l, cfg.lam, y, np.zeros(1), np.zeros(6), h,
        1, cfg.gamma, cfg.epsilon, cfg.omega_min, cfg.omega_max,
        cfg.rate_min, cfg.rate_max, fst.lo, fst.hi, omega0, 1, 1e12)
    assert status == 0
    st = ObserverState.zero(3)
    for k in range(N):
        np.testing.assert_allclose(x_log[k], st.x, atol=1e-10)
        assert omega_log[k] == pytest.approx(fst.omega_hat, abs=1e-10)
        e_y = y[2 * k] - st.x[0::2].sum()
        x_prev = st.x
        st = step(st, (y[2 * k], y[2 * k + 1], y[2 * k + 2]), fst.omega_hat, gains, h)
        fst = fll_step(cfg, fst, e_y, x_prev, h)
    assert omega_log[N] == pytest.approx(fst.omega_hat, abs=1e-10)


def test_backends_agree():
    backends = available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    hs, gains, omega, h, y = make_setup(2000)
    N = (len(y) - 1) // 2
    args = (hs.as_array(), gains.l, lambda_vector(gains), y, np.zeros(1),
            np.zeros(6), h, 1, 60.0, 0.1, 2 * math.pi * 39, 2 * math.pi * 61,
            -2e4 * math.pi, 2e4 * math.pi, 200.0, 2 * math.pi * 61, 200.0, 1, 1e12)
    results = {name: fn(*args) for name, fn in backends.items()}
    (s1, _, k1, x1, w1) = results["python"]
    (s2, _, k2, x2, w2) = results["cython"]
    assert s1 == s2 == 0
    np.testing.assert_array_equal(k1, k2)
    scale = np.abs(x1).max()
    assert np.abs(x1 - x2).max() < 1e-10 * scale
    assert np.abs(w1 - w2).max() < 1e-9 * np.abs(w1).max()


def test_divergence_truncates_logs(backend):
    # negative frequency estimate makes the closed loop anti-stable
    hs = HarmonicSet([1])
    gains = ObserverGains(hs, [2.0], [-1.0], "mSOGI")
    h = 1e-3
    N = 5000
    y = np.zeros(2 * N + 1)
    omega_ext = np.full(N + 1, -80.0)
    x0 = np.array([1.0, 0.0])
    status, fail_step, ks, x_log, omega_log = backend(
        hs.as_array(), gains.l, np.zeros(2), y, omega_ext, x0, h,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1e12)
    assert status == 1
    assert 0 < fail_step <= N
    assert len(x_log) == len(ks) == len(omega_log)
    assert len(x_log) < N + 1
    assert np.all(np.isfinite(x_log))


def test_log_decimation_row_count(backend):
    hs, gains, omega, h, y = make_setup(1000)
    N = 1000
    omega_ext = np.full(N + 1, omega)
    for log_every, want in ((1, 1001), (10, 101), (7, math.ceil(1000 / 7) + 1)):
        status, _, ks, x_log, _ = backend(
            hs.as_array(), gains.l, np.zeros(6), y, omega_ext, np.zeros(6), h,
            0, 0, 0, 0, 0, 0, 0, 0, 0, 0, log_every, 1e12)
        assert status == 0
        assert len(ks) == len(x_log) == want
        assert ks[0] == 0 and ks[-1] == N


def test_determinism_bit_identical(backend):
    hs, gains, omega, h, y = make_setup(500)
    N = 500
    omega_ext = np.full(N + 1, omega)
    args = (hs.as_array(), gains.l, np.zeros(6), y, omega_ext, np.zeros(6), h,
            0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1e12)
    _, _, _, x_a, _ = backend(*args)
    _, _, _, x_b, _ = backend(*args)
    np.testing.assert_array_equal(x_a, x_b)
