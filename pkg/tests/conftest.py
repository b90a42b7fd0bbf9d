import numpy as np
import pytest

from harmest._core import available_backends


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    """Run a test under every available kernel backend."""
    return available_backends()[request.param]


def faddeev_leverrier(A):
    """Characteristic polynomial coefficients (monic, descending) of A.

    Independent oracle: the Faddeev-LeVerrier recurrence uses only matrix
    products and traces, no eigenvalue solver and no convolution.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    coeffs = np.empty(m + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    for k in range(1, m + 1):
        M = A @ M + coeffs[k - 1] * np.eye(m)
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def quadratic_pair_poly(roots, tol=1e-9):
    """Real polynomial from conjugate-closed roots by expanding real
    quadratics (s^2 - 2*Re(r)*s + |r|^2) and real linear factors.

    Independent of the complex-convolution route used by the package.
    """
    roots = [complex(r) for r in roots]
    coeffs = np.array([1.0])
    used = [False] * len(roots)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        if abs(r.imag) <= tol:
            coeffs = np.convolve(coeffs, [1.0, -r.real])
            used[i] = True
            continue
        match = None
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - r.conjugate()) <= 1e-9 * max(abs(r), 1.0):
                match = j
                break
        assert match is not None, "oracle needs conjugate-closed input"
        coeffs = np.convolve(coeffs, [1.0, -2.0 * r.real, abs(r) ** 2])
        used[i] = used[match] = True
    return coeffs


def random_stable_conjugate_poles(rng, n, re_max=5.0, im_max=10.0):
    """n conjugate pairs with Re in [-re_max, -0.1], Im in [0.1, im_max]."""
    poles = []
    for _ in range(n):
        re = -rng.uniform(0.1, re_max)
        im = rng.uniform(0.1, im_max)
        poles.extend([complex(re, im), complex(re, -im)])
    return poles


def random_observer_poles(rng, orders, sigma=(0.3, 3.0), jitter=0.2):
    """Random stable pole set anchored at the internal-model resonances.

    One conjugate pair per harmonic with imaginary part near +-nu (the
    observer's natural tuning regime: self-oscillation is preserved and the
    realized eigenproblem stays well-conditioned).  Pole sets with pairs far
    from every resonance can carry eigenvalue condition numbers beyond 1e8,
    where no float64 gain vector reproduces them to 1e-8.
    """
    poles = []
    for v in orders:
        p = complex(-rng.uniform(*sigma), v + rng.uniform(-jitter, jitter))
        poles.extend([p, p.conjugate()])
    return poles


def random_order_set(rng, n, hi=12.0, min_gap=0.5):
    """Harmonic orders starting at exactly 1 with a minimum separation."""
    if n == 1:
        return [1.0]
    slack = hi - 1.0 - (n - 1) * min_gap
    u = np.sort(rng.uniform(0.0, slack, n - 1))
    return [1.0] + list(1.0 + u + min_gap * np.arange(1, n))
