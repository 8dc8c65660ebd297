import math

import numpy as np
import pytest
from scipy.special import factorial

from kerrneg import fock
from kerrneg.errors import DimMismatch, TruncationError
from kerrneg.gaussian import GaussianSpec


def test_ladder_commutator_away_from_cutoff():
    a, ad = fock.ladder_operators(12)
    comm = a @ ad - ad @ a
    assert np.allclose(comm[:-1, :-1], np.eye(11))


def test_vacuum_quadrature_variance():
    m = fock.quadrature_moments(fock.vacuum(10))
    assert m["var_x"] == pytest.approx(0.25)
    assert m["var_y"] == pytest.approx(0.25)


def test_coherent_vector_poisson_weights():
    alpha = 1.3 - 0.4j
    v = fock.coherent_vector(50, alpha)
    k = np.arange(50)
    p = np.exp(-abs(alpha) ** 2) * abs(alpha) ** (2 * k) / factorial(k)
    assert np.allclose(np.abs(v) ** 2, p, atol=1e-14)


def test_coherent_mean_matches_alpha():
    m = fock.quadrature_moments(fock.coherent_state(60, 1.5 + 0.7j))
    assert m["mean_x"] == pytest.approx(1.5, abs=1e-10)
    assert m["mean_y"] == pytest.approx(0.7, abs=1e-10)


def test_displace_matches_coherent_vector():
    d = fock.displace(60, 0.8j)
    assert np.allclose(d[:, 0], fock.coherent_vector(60, 0.8j), atol=1e-12)


def test_squeezed_vector_matches_operator():
    v = fock.squeezed_vacuum_vector(120, 0.7)
    s = fock.squeeze(120, 0.7)
    assert np.allclose(v, s[:, 0], atol=1e-10)


def test_squeezed_variances():
    r = 1.0
    _, rho = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=r))
    m = fock.quadrature_moments(rho)
    assert m["var_x"] == pytest.approx(math.exp(-2 * r) / 4, rel=1e-6)
    assert m["var_y"] == pytest.approx(math.exp(2 * r) / 4, rel=1e-6)


def test_squeeze_tail_check_is_strict():
    with pytest.raises(TruncationError):
        fock.squeeze(60, 1.0)
    s = fock.squeeze(60, 1.0, check=False)
    x, _ = fock.quadratures(60)
    var = np.real(s[:, 0].conj() @ x @ x @ s[:, 0])
    assert var == pytest.approx(math.exp(-2) / 4, abs=1e-6)


def test_rotation_is_phase():
    r = fock.rotate(5, 0.3)
    assert np.allclose(np.diag(r), np.exp(1j * 0.3 * np.arange(5)))


def test_thermal_mean_photon_number():
    rho = fock.thermal_state(200, 1.7)
    n = np.real(np.trace(fock.number_operator(200) @ rho))
    assert n == pytest.approx(1.7, rel=1e-10)


def test_gaussian_state_displaced_squeezed_thermal():
    spec = GaussianSpec(nbar0=0.5, r0=0.4, theta0=0.0, alpha0=1.0 + 0.5j)
    rho = fock.gaussian_state(120, spec)
    m = fock.quadrature_moments(rho)
    sig2 = 2 * spec.nbar0 + 1
    assert m["mean_x"] == pytest.approx(1.0, abs=1e-8)
    assert m["mean_y"] == pytest.approx(0.5, abs=1e-8)
    assert m["var_x"] == pytest.approx(sig2 * math.exp(-0.8) / 4, rel=1e-7)
    assert m["var_y"] == pytest.approx(sig2 * math.exp(0.8) / 4, rel=1e-7)


def test_auto_dim_grows_until_tail_ok():
    n, rho = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=2.0), threshold=1e-14)
    fock.check_truncation(rho, 1e-14)
    with pytest.raises(TruncationError):
        fock.make_state(int(n / 1.25), fock.StateSpec("squeezed_vacuum", r0=2.0), 1e-14)
    assert fock.is_density_matrix(rho)


def test_fidelity_pure_and_mixed_agree():
    rho = fock.coherent_state(40, 1.0)
    v = fock.coherent_vector(40, 1.0)
    assert fock.fidelity(rho, v) == pytest.approx(1.0, abs=1e-12)
    assert fock.fidelity(rho, np.outer(v, v.conj())) == pytest.approx(1.0, abs=1e-6)


def test_dim_mismatch():
    with pytest.raises(DimMismatch):
        fock.expectation(np.eye(3), fock.vacuum(4))


def test_number_state_bounds():
    with pytest.raises(TruncationError):
        fock.number_state(4, 4)
