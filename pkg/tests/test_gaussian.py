import math
import warnings

import numpy as np
import pytest

from kerrneg import gaussian as gs


def test_wigner_normalised_and_bounded():
    spec = gs.GaussianSpec(nbar0=0.3, r0=0.9, theta0=0.4, alpha0=0.5 - 0.2j)
    x = np.linspace(-12, 12, 1201)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    w = gs.gaussian_wigner(spec, xx, yy)
    assert w.sum() * (x[1] - x[0]) ** 2 == pytest.approx(1.0, abs=1e-8)
    assert w.max() <= 2 / math.pi / spec.sigma**2 + 1e-12


def test_vacuum_peak():
    assert gs.gaussian_wigner(gs.GaussianSpec(), 0.0, 0.0) == pytest.approx(2 / math.pi)


def test_moments_wigner_agrees_with_spec():
    spec = gs.GaussianSpec(nbar0=1.0, r0=0.5, theta0=1.0)
    m = gs.spec_moments(spec)
    pts = np.array([0.3, -0.7, 1.1])
    assert np.allclose(m.wigner(pts, pts[::-1]), gs.gaussian_wigner(spec, pts, pts[::-1]))


def test_theta_zero_squeezes_x():
    cov = gs.spec_moments(gs.GaussianSpec(r0=1.0)).cov
    assert cov[0, 0] == pytest.approx(math.exp(-2) / 4)
    assert cov[1, 1] == pytest.approx(math.exp(2) / 4)


def test_damping_reaches_thermal():
    m = gs.damp_gaussian(gs.GaussianSpec(r0=1.5, alpha0=2.0), 1.0, 3.0, 50.0)
    assert np.allclose(m.cov, (7 / 4) * np.eye(2), atol=1e-12)
    assert np.allclose(m.mean, 0.0, atol=1e-10)


def test_t_decay():
    assert gs.t_decay(2.0, 0.0) == pytest.approx(math.log(2) / 2)
    assert gs.t_decay(1.0, 1000.0, high_temp=True) == pytest.approx(1 / 2001)
    with pytest.warns(RuntimeWarning):
        assert gs.t_decay(0.0, 1.0) == math.inf
    with pytest.raises(ValueError):
        gs.t_decay(-1.0, 0.0)


def test_tables():
    assert [round(s, 2) for _, s in gs.squeezing_table()][:3] == [1.65, 2.12, 2.72]
    for r0, v in gs.decay_table():
        assert v == pytest.approx(math.exp(2 * r0))


def test_duffing_mapping():
    p = gs.DuffingParams(beta=1e-20, m=1e-15, omega=2 * math.pi * 1e6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        g = gs.duffing_to_kerr(p)
    assert g == pytest.approx(3 * 1.054571817e-34 * 1e-20 / (8 * 1e-30 * p.omega**2))


def test_rejects_bad_spec():
    with pytest.raises(ValueError):
        gs.GaussianSpec(r0=-1)
    with pytest.raises(ValueError):
        gs.GaussianSpec(nbar0=float("nan"))
