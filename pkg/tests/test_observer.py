import math

import numpy as np
import pytest

from harmest.observer import (DivergenceError, ObserverGains, ObserverState,
                              derivative, observability_matrix, output,
                              output_vector, rk4_step, rotation_matrix, step,
                              system_matrix)
from harmest.signals import HarmonicSet


def msogi_gains(k=2.0):
    return ObserverGains(HarmonicSet([1]), [k], [-k * k / 4.0], "mSOGI")


class TestStructure:
    def test_rotation_matrix_blocks(self):
        J = rotation_matrix([1.0, 2.5])
        np.testing.assert_allclose(J, [[0, -1, 0, 0], [1, 0, 0, 0],
                                       [0, 0, 0, -2.5], [0, 0, 2.5, 0]])
        np.testing.assert_allclose(J, -J.T)

    def test_output_vector(self):
        np.testing.assert_allclose(output_vector(3), [1, 0, 1, 0, 1, 0])

    def test_gain_stacking(self):
        g = ObserverGains(HarmonicSet([1, 2]), [2.0, 1.5], [-1.0, -0.5], "mSOGI")
        np.testing.assert_allclose(g.l, [2.0, -1.0, 3.0, -1.0])

    def test_ssogi_and_anf_vectors(self):
        hs = HarmonicSet([1, 2, 4])
        np.testing.assert_allclose(ObserverGains.ssogi(hs).l,
                                   math.sqrt(2.0) * output_vector(3))
        np.testing.assert_allclose(ObserverGains.anf(hs).l, output_vector(3))

    def test_ssogi_rejects_nonzero_g(self):
        with pytest.raises(ValueError, match="g = 0"):
            ObserverGains(HarmonicSet([1]), [1.0], [0.5], "sSOGI")

    def test_non_hurwitz_rejected(self):
        with pytest.raises(ValueError, match="stabilizing"):
            ObserverGains(HarmonicSet([1]), [0.0], [0.0], "mSOGI")

    def test_hurwitz_check_bypass(self):
        g = ObserverGains(HarmonicSet([1]), [0.0], [0.0], "mSOGI", require_hurwitz=False)
        np.testing.assert_allclose(g.l, [0.0, 0.0])


class TestDerivative:
    def test_zero_state_zero_input(self):
        g = msogi_gains()
        st = ObserverState.zero(1)
        np.testing.assert_allclose(derivative(st, 0.0, 1.0, g), [0.0, 0.0])

    def test_pure_rotation_without_feedback(self):
        g = ObserverGains(HarmonicSet([1]), [0.0], [0.0], "mSOGI", require_hurwitz=False)
        rate = derivative(ObserverState(np.array([1.0, 0.0])), 0.0, 1.0, g)
        np.testing.assert_allclose(rate, [0.0, 1.0])

    def test_forcing_through_gain_vector(self):
        g = ObserverGains.from_l(HarmonicSet([1]), [2.0, -1.0], "mSOGI")
        rate = derivative(ObserverState(np.zeros(2)), 1.0, 1.0, g)
        np.testing.assert_allclose(rate, [2.0, -1.0])

    def test_nonpositive_frequency_rejected(self):
        g = msogi_gains()
        with pytest.raises(ValueError, match="positive"):
            derivative(ObserverState.zero(1), 0.0, 0.0, g)


class TestStep:
    def test_quarter_turn_rotation(self):
        g = ObserverGains(HarmonicSet([1]), [0.0], [0.0], "mSOGI", require_hurwitz=False)
        st = ObserverState(np.array([1.0, 0.0]))
        h = 1e-4
        for _ in range(int(round((math.pi / 2) / h))):
            st = step(st, 0.0, 1.0, g, h)
        np.testing.assert_allclose(st.x, [math.cos(st.t), math.sin(st.t)], atol=1e-8)
        np.testing.assert_allclose(st.x, [0.0, 1.0], atol=1e-3)

    def test_unforced_decay_matches_eigenvalue_oracle(self):
        hs = HarmonicSet([1, 3])
        gains = ObserverGains.msogi(hs)
        omega = 100.0
        worst_re = np.linalg.eigvals(gains.system_matrix()).real.max()
        # time for the slowest mode to decay by 1e-8; non-normal transients
        # leave two orders of magnitude of headroom to the 1e-6 assertion
        T = math.log(1e8) / (omega * abs(worst_re))
        h = 1e-4
        st = ObserverState(np.array([1.0, -2.0, 0.5, 0.3]))
        x0_norm = np.linalg.norm(st.x)
        for _ in range(int(T / h) + 1):
            st = step(st, 0.0, omega, gains, h)
        assert np.linalg.norm(st.x) < 1e-6 * x0_norm

    @pytest.mark.parametrize("gains", [msogi_gains(2.0),
                                       ObserverGains.ssogi(HarmonicSet([1]))])
    def test_tracks_in_phase_and_quadrature(self, gains):
        omega = 2 * math.pi * 50
        h = 1e-4
        st = ObserverState.zero(1)
        n_period = int(round(2 * math.pi / (omega * h)))
        errs_y, errs_q = [], []
        for k in range(n_period * 12):
            t = k * h
            ys = (math.cos(omega * t), math.cos(omega * (t + h / 2)),
                  math.cos(omega * (t + h)))
            st = step(st, ys, omega, gains, h)
            if k >= n_period * 11:
                errs_y.append(abs(st.x[0] - math.cos(omega * st.t)))
                errs_q.append(abs(st.x[1] - math.sin(omega * st.t)))
        assert max(errs_y) < 1e-3
        assert max(errs_q) < 1e-3

    def test_divergence_detected_with_time(self):
        g = ObserverGains(HarmonicSet([1]), [-1.0], [0.0], "mSOGI", require_hurwitz=False)
        st = ObserverState(np.array([1e9, 1e9]))
        with pytest.raises(DivergenceError) as err:
            for _ in range(10000):
                st = step(st, 0.0, 1e4, g, 1e-2)
        assert err.value.time > 0

    def test_msogi_with_zero_g_equals_ssogi_path(self):
        hs = HarmonicSet([1, 2])
        ssogi = ObserverGains.ssogi(hs)
        msogi_g0 = ObserverGains(hs, ssogi.k, np.zeros(2), "mSOGI")
        np.testing.assert_array_equal(ssogi.l, msogi_g0.l)
        x = np.array([0.3, -0.7, 1.1, 0.2])
        a = rk4_step(x, (1.0, 0.9, 0.8), 314.0, ssogi.orders, ssogi.l, 1e-4)
        b = rk4_step(x, (1.0, 0.9, 0.8), 314.0, msogi_g0.orders, msogi_g0.l, 1e-4)
        np.testing.assert_array_equal(a, b)


def test_rk4_order_of_convergence():
    """Halving h cuts the end-state error (vs an h/16 reference) by >= 8x."""
    hs = HarmonicSet([1])
    gains = msogi_gains(2.0)
    omega = 2 * math.pi * 50
    T = 0.02

    def integrate(h):
        st = ObserverState.zero(1)
        for k in range(int(round(T / h))):
            t = k * h
            ys = (math.cos(omega * t), math.cos(omega * (t + h / 2)),
                  math.cos(omega * (t + h)))
            st = step(st, ys, omega, gains, h)
        return st.x

    h = 2e-4
    ref = integrate(h / 16)
    err_h = np.linalg.norm(integrate(h) - ref)
    err_h2 = np.linalg.norm(integrate(h / 2) - ref)
    assert err_h / err_h2 >= 8.0


class TestOutput:
    def test_zero(self):
        assert output(np.zeros(4)) == 0.0

    def test_picks_alpha_slots(self):
        assert output(np.array([1.0, 9.0, 2.0, 9.0])) == 3.0

    def test_random_sum(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=8)
        assert output(x) == pytest.approx(x[0::2].sum())


class TestObservability:
    def test_single_harmonic_full_rank(self):
        _, rank = observability_matrix([1.0])
        assert rank == 2

    def test_three_harmonics_full_rank(self):
        _, rank = observability_matrix([1.0, 2.0, 3.0])
        assert rank == 6

    def test_duplicate_orders_rank_deficient(self):
        O, rank = observability_matrix([1.0, 1.0])
        assert rank < 4
        assert np.linalg.matrix_rank(O) == rank


def test_bounded_input_bounded_state():
    """Random bounded input and in-band frequency trace: state stays bounded."""
    rng = np.random.default_rng(99)
    hs = HarmonicSet([1, 2, 3])
    gains = ObserverGains.msogi(hs)
    h = 1e-4
    N = 10000  # 1 s
    y = rng.uniform(-400, 400, 2 * N + 1)
    omega = rng.uniform(2 * math.pi * 39, 2 * math.pi * 61, N + 1)
    st = ObserverState.zero(3)
    sup = 0.0
    for k in range(N):
        st = step(st, (y[2 * k], y[2 * k + 1], y[2 * k + 2]), omega[k], gains, h)
        sup = max(sup, float(np.abs(st.x).max()))
    assert math.isfinite(sup)
    assert sup < 1e4  # far from the divergence limit for a ~400-unit input
