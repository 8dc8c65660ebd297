import math

import numpy as np
import pytest

from kerrneg import asymptotic as asy
from kerrneg import gaussian as gs
from kerrneg.errors import KGridTooSmall, SingularLine


def test_initial_line_is_rescaled_gaussian():
    p = asy.AsymptoticParams(s=math.exp(2))
    mu = np.linspace(-3, 3, 13)
    for y in (0.0, 0.4, 1.1):
        ref = (2 / math.pi) * np.exp(-2 * y * y - 2 * mu * mu)
        assert np.allclose(asy.line_values(y, p, 0.0, mu), ref, atol=1e-13)


def test_fft_inverse_matches_direct_sum():
    k = asy.k_grid(17.0, 1 / 16)
    h = (1 / math.pi) * np.exp(-k * k / 8) * np.exp(-1j * k**3 * 0.05)
    mu, fast = asy.inverse_uniform(h, k, 0.02)
    sel = np.abs(mu) <= 10
    slow = asy._inverse(h, k, mu[sel])[0]
    assert np.max(np.abs(fast[0][sel] - slow)) < 1e-12


def test_spectral_line_matches_airy_convolution():
    # d_tau u = d_mu^3 u solved two ways from the same Gaussian
    p = asy.AsymptoticParams(s=math.exp(2))
    y, t = 0.8, 0.1 / math.exp(8)
    tau_ = asy.tau(y, p, t)
    mu = np.linspace(-2.5, 1.5, 9)
    f = lambda xi: (2 / math.pi) * math.exp(-2 * y * y - 2 * xi * xi)  # noqa: E731
    ref = asy.airy_reference(f, tau_, mu)
    assert np.max(np.abs(asy.line_values(y, p, t, mu) - ref)) < 1e-9


def test_reconstruct_at_zero_time_is_squeezed_gaussian():
    p = asy.AsymptoticParams(s=math.exp(1.5), sigma=math.sqrt(3))
    _, phys = asy.reconstruct(p, 0.0)
    xx, yy = phys.grid.mesh()
    ref = gs.gaussian_wigner(gs.GaussianSpec(nbar0=1.0, r0=1.5), xx, yy)
    assert np.max(np.abs(phys.values - ref)) < 1e-10


def test_thermal_collapse_is_exact():
    t = np.array([0.05, 0.15, 0.3])
    a = asy.asymptotic_negativity(asy.AsymptoticParams(s=math.exp(2)), t)
    b = asy.asymptotic_negativity(asy.AsymptoticParams(s=math.exp(2), sigma=math.sqrt(3)), 3 * t)
    assert np.allclose(a.n_vol, b.n_vol, rtol=1e-6)
    assert np.allclose(a.sigma2_n_peak, b.sigma2_n_peak, rtol=1e-6)


def test_negativity_grows_from_zero():
    c = asy.asymptotic_negativity(asy.AsymptoticParams(s=math.exp(2)), [0.0, 0.05, 0.3])
    assert c.n_vol[0] < 1e-12
    assert c.n_vol[1] == pytest.approx(6.06e-5, rel=0.03)
    assert c.n_vol[2] == pytest.approx(0.02355, rel=0.01)


def test_damped_maximum():
    s = math.exp(2)
    p = asy.AsymptoticParams(s=s, gamma_eff=1.0 * s**2)
    c = asy.asymptotic_negativity(p, np.linspace(1.6, 2.4, 5))
    assert c.max_n_vol == pytest.approx(0.0363, rel=0.02)


def test_damping_ratio_and_from_physical():
    p = asy.AsymptoticParams.from_physical(1.0, nbar0=0.5, gamma=0.01, nbar=10.0)
    assert p.sigma == pytest.approx(math.sqrt(2))
    assert p.damping_ratio == pytest.approx(0.21 / math.exp(2))
    assert p.time(2.0) == pytest.approx(2 / math.exp(4))


def test_errors_and_warnings():
    with pytest.raises(KGridTooSmall):
        asy.initial_spectrum(0.0, asy.k_grid(5.0))
    with pytest.raises(SingularLine):
        asy.beta(0.0, asy.AsymptoticParams(s=5.0, gamma_eff=1.0))
    assert asy.beta(0.0, asy.AsymptoticParams(s=5.0)) == 0.0
    with pytest.raises(ValueError):
        asy.AsymptoticParams(s=0.5)
    with pytest.warns(RuntimeWarning):
        asy.asymptotic_negativity(asy.AsymptoticParams(s=1.5), [0.1])
    with pytest.raises(KGridTooSmall):
        asy.asymptotic_negativity(asy.AsymptoticParams(s=math.exp(2)), [5.0], k=asy.k_grid(17.0, 0.5))
