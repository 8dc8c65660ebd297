"""Closed-form results for Gaussian states.

Phase-space conventions used throughout the package: ``alpha = x + i y`` with
``x = (a + a^dag)/2`` and ``y = (a - a^dag)/(2i)``, so the vacuum has variance
1/4 in each quadrature and ``W`` integrates to one over ``dx dy``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import constants

__all__ = [
    "GaussianSpec",
    "GaussianMoments",
    "OUMoments",
    "DuffingParams",
    "gaussian_wigner",
    "moments_wigner",
    "spec_moments",
    "ou_moments",
    "damp_gaussian",
    "t_decay",
    "duffing_to_kerr",
    "squeezing_table",
    "decay_table",
]


@dataclass(frozen=True)
class GaussianSpec:
    """Displaced squeezed thermal state ``D(alpha0) S(xi) rho_th S^dag D^dag``.

    ``xi = r0 * exp(1j * theta0)``. With ``theta0 = 0`` the x quadrature is
    squeezed by ``s = exp(r0)``.
    """

    nbar0: float = 0.0
    r0: float = 0.0
    theta0: float = 0.0
    alpha0: complex = 0j

    def __post_init__(self):
        if not (self.nbar0 >= 0 and math.isfinite(self.nbar0)):
            raise ValueError(f"nbar0 must be finite and >= 0, got {self.nbar0}")
        if not (self.r0 >= 0 and math.isfinite(self.r0)):
            raise ValueError(f"r0 must be finite and >= 0, got {self.r0}")
        object.__setattr__(self, "alpha0", complex(self.alpha0))

    @property
    def sigma(self) -> float:
        return math.sqrt(2 * self.nbar0 + 1)

    @property
    def s(self) -> float:
        return math.exp(self.r0)

    @property
    def xi(self) -> complex:
        return self.r0 * complex(math.cos(self.theta0), math.sin(self.theta0))

    @property
    def mean_photon_number(self) -> float:
        # (1/4) sigma^2 (s^2 + s^-2) - 1/2 + |alpha0|^2
        s2 = self.s**2
        return 0.25 * self.sigma**2 * (s2 + 1 / s2) - 0.5 + abs(self.alpha0) ** 2


def gaussian_wigner(spec: GaussianSpec, x, y):
    """Wigner function of ``spec`` at ``(x, y)`` (broadcasting)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - spec.alpha0.real
    dy = y - spec.alpha0.imag
    c, s_ = math.cos(spec.theta0 / 2), math.sin(spec.theta0 / 2)
    e = math.exp(spec.r0)
    u = (dx * c + dy * s_) * e
    v = (dx * s_ - dy * c) / e
    half = spec.nbar0 + 0.5
    return np.exp(-(u * u + v * v) / half) / (math.pi * half)


@dataclass(frozen=True)
class GaussianMoments:
    """First and second quadrature moments of a Gaussian Wigner function."""

    mean: tuple[float, float]
    cov: np.ndarray

    def wigner(self, x, y):
        return moments_wigner(self, x, y)


def spec_moments(spec: GaussianSpec) -> GaussianMoments:
    """Quadrature mean and covariance of ``spec``."""
    sig2 = spec.sigma**2
    c, s_ = math.cos(spec.theta0 / 2), math.sin(spec.theta0 / 2)
    rot = np.array([[c, -s_], [s_, c]])
    lam = np.diag([sig2 * math.exp(-2 * spec.r0) / 4, sig2 * math.exp(2 * spec.r0) / 4])
    return GaussianMoments(
        mean=(spec.alpha0.real, spec.alpha0.imag), cov=rot @ lam @ rot.T
    )


def moments_wigner(m: GaussianMoments, x, y):
    """Normalised bivariate Gaussian with the given moments."""
    x = np.asarray(x, dtype=float) - m.mean[0]
    y = np.asarray(y, dtype=float) - m.mean[1]
    inv = np.linalg.inv(m.cov)
    q = inv[0, 0] * x * x + 2 * inv[0, 1] * x * y + inv[1, 1] * y * y
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(m.cov)))


@dataclass(frozen=True)
class OUMoments:
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float
    t: float


def ou_moments(x0: float, y0: float, gamma: float, nbar: float, t: float) -> OUMoments:
    """Moments of the damping Green's function started from a point ``(x0, y0)``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    decay = math.exp(-gamma * t / 2)
    var = (2 * nbar + 1) * (1 - math.exp(-gamma * t)) / 4
    return OUMoments(x0 * decay, y0 * decay, var, var, 0.0, t)


def damp_gaussian(spec: GaussianSpec | GaussianMoments, gamma: float, nbar: float,
                  t: float) -> GaussianMoments:
    """Gaussian state after damping for time ``t``.

    The Green's function is itself Gaussian, so the result is the input
    contracted by ``exp(-gamma t / 2)`` and convolved with an isotropic
    Gaussian of variance ``(2 nbar + 1)(1 - exp(-gamma t))/4``.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    m = spec_moments(spec) if isinstance(spec, GaussianSpec) else spec
    k = math.exp(-gamma * t)
    g = ou_moments(m.mean[0], m.mean[1], gamma, nbar, t)
    cov = k * np.asarray(m.cov) + g.var_x * np.eye(2)
    return GaussianMoments(mean=(g.mean_x, g.mean_y), cov=cov)


def t_decay(gamma: float, nbar: float, high_temp: bool = False) -> float:
    """Time after which damping alone leaves a non-negative Wigner function.

    Returns ``inf`` (with a ``RuntimeWarning``) when ``gamma == 0``.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma == 0:
        warnings.warn("t_decay is infinite without damping", RuntimeWarning, stacklevel=2)
        return math.inf
    m = 2 * nbar + 1
    if high_temp:
        return 1.0 / (m * gamma)
    return math.log1p(1.0 / m) / gamma


@dataclass(frozen=True)
class DuffingParams:
    beta: float  # J / m^4
    m: float  # kg
    omega: float  # rad / s

    def __post_init__(self):
        if self.m <= 0 or self.omega <= 0:
            raise ValueError("mass and frequency must be positive")


def duffing_to_kerr(p: DuffingParams, hbar: float = constants.hbar) -> float:
    """Kerr coefficient ``g`` (rad/s) equivalent to a weak quartic potential."""
    g = 3 * hbar * p.beta / (8 * p.m**2 * p.omega**2)
    if abs(g) / p.omega > 1e-3:
        warnings.warn(
            f"g/omega = {abs(g) / p.omega:.2e}; the rotating-wave mapping assumes omega >> g",
            RuntimeWarning,
            stacklevel=2,
        )
    return g


def squeezing_table(r0s=(0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5)):
    """Rows ``(r0, s)`` relating the squeezing parameter to ``s = exp(r0)``."""
    return [(r0, GaussianSpec(r0=r0).s) for r0 in r0s]


def decay_table(r0s=(0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0), gamma=1.0, nbar=1000.0):
    """Rows ``(r0, gamma (2 nbar + 1) s^2 t_decay)`` with the high-temperature bound."""
    rows = []
    for r0 in r0s:
        s = GaussianSpec(r0=r0).s
        td = t_decay(gamma, nbar, high_temp=True)
        rows.append((r0, gamma * (2 * nbar + 1) * s**2 * td))
    return rows
