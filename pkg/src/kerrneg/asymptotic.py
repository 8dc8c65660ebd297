"""Large-squeezing spectral solver.

In the coordinates ``x~ = s x / sigma``, ``y~ = y / (s sigma)`` a strongly
squeezed Gaussian becomes the isotropic ``W~ = (2/pi) exp(-2 x~^2 - 2 y~^2)``
with ``W~ = sigma^2 W``. Keeping the leading powers of ``s`` the Kerr flow,
damping and dephasing reduce, on every line of constant ``y~``, to

    d_tau u = d_mu^3 u + beta d_mu^2 u,
    mu = x~ - 2 g sigma^2 s^4 y~^3 t,   tau = g s^4 y~ t / (8 sigma^2),
    beta = gamma_eff / (g s^2 y~) + 4 gamma_phi sigma^2 y~ / g,

with ``gamma_eff = gamma (2 nbar + 1)``. In Fourier space each mode picks up
``exp(-i k^3 tau - beta k^2 tau)``; ``beta tau`` does not change sign with
``y~``. Transforms use ``h(k) = (2 pi)^{-1/2} int u(mu) e^{-i k mu} d mu``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft, integrate, special

from .errors import KGridTooSmall, SingularLine
from .wigner import PhaseGrid, WignerField

__all__ = [
    "AsymptoticParams",
    "SpectralLine",
    "k_grid",
    "y_lines",
    "initial_spectrum",
    "beta",
    "tau",
    "evolve_line",
    "line_values",
    "inverse_uniform",
    "reconstruct",
    "airy_reference",
    "asymptotic_negativity",
    "AsymptoticCurves",
]

K_TAIL = 1e-14


@dataclass(frozen=True)
class AsymptoticParams:
    s: float
    sigma: float = 1.0
    g: float = 1.0
    gamma_eff: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        if self.s < 1 or self.sigma < 1:
            raise ValueError("need s >= 1 and sigma >= 1")
        if self.g <= 0:
            raise ValueError("the spectral solver needs g > 0")
        if self.gamma_eff < 0 or self.gamma_phi < 0:
            raise ValueError("rates must be >= 0")

    @property
    def validity_ratio(self) -> float:
        """``s / sigma``; the approximation wants this large."""
        return self.s / self.sigma

    @property
    def valid(self) -> bool:
        return self.validity_ratio >= 2.0

    @property
    def damping_ratio(self) -> float:
        """``gamma (2 nbar + 1) / (g s^2)``, the collapse variable for damping."""
        return self.gamma_eff / (self.g * self.s**2)

    def time(self, scaled: float) -> float:
        """Physical time for the scaled time ``g t s^4``."""
        return scaled / (self.g * self.s**4)

    @classmethod
    def from_physical(cls, r0: float, nbar0: float = 0.0, g: float = 1.0, gamma: float = 0.0,
                      nbar: float = 0.0, gamma_phi: float = 0.0) -> "AsymptoticParams":
        return cls(math.exp(r0), math.sqrt(2 * nbar0 + 1), g, gamma * (2 * nbar + 1), gamma_phi)


@dataclass(frozen=True)
class SpectralLine:
    y: float
    k: np.ndarray
    h: np.ndarray


def k_grid(k_max: float = 17.0, dk: float = 1.0 / 32) -> np.ndarray:
    """Symmetric uniform wavenumber grid ``[-k_max, k_max]``."""
    n = int(round(k_max / dk))
    return np.arange(-n, n + 1) * dk


def y_lines(n: int = 257, y_max: float = 3.0) -> np.ndarray:
    return np.linspace(-y_max, y_max, n)


def initial_spectrum(y: float, k: np.ndarray | None = None, sigma: float = 1.0) -> SpectralLine:
    """Spectrum of the rescaled Gaussian on line ``y``; identical for every ``sigma``."""
    k = k_grid() if k is None else np.asarray(k, dtype=float)
    if not np.allclose(k, -k[::-1], rtol=0, atol=1e-12):
        raise ValueError("k grid must be symmetric about 0")
    k_max = float(np.max(np.abs(k)))
    if math.exp(-k_max**2 / 8) >= K_TAIL:
        raise KGridTooSmall(f"exp(-k_max^2/8) = {math.exp(-k_max**2 / 8):.2e} at k_max={k_max}")
    h = (1 / math.pi) * math.exp(-2 * y * y) * np.exp(-k * k / 8)
    return SpectralLine(float(y), k, h.astype(complex))


def beta(y: float, p: AsymptoticParams) -> float:
    """Diffusion coefficient of line ``y``."""
    if y == 0:
        if p.gamma_eff == 0 and p.gamma_phi == 0:
            return 0.0
        raise SingularLine("beta is singular on y~ = 0")
    return p.gamma_eff / (p.g * p.s**2 * y) + 4 * p.gamma_phi * p.sigma**2 * y / p.g


def tau(y: float, p: AsymptoticParams, t: float) -> float:
    return p.g * p.s**4 * y * t / (8 * p.sigma**2)


def _diffusion_exponent(y, p: AsymptoticParams, t):
    """``beta tau``, written so that the y~ = 0 line is regular."""
    return p.gamma_eff * p.s**2 * t / (8 * p.sigma**2) + 0.5 * p.gamma_phi * p.s**4 * np.square(y) * t


def evolve_line(line: SpectralLine, tau_: float, beta_: float) -> np.ndarray:
    """Multiply each mode by ``exp(-i k^3 tau - beta k^2 tau)``."""
    k = line.k
    return line.h * np.exp(-1j * k**3 * tau_ - beta_ * k * k * tau_)


def _factor(k, tau_, bt):
    return np.exp(-1j * np.multiply.outer(tau_, k**3) - np.multiply.outer(bt, k * k))


def _inverse(h: np.ndarray, k: np.ndarray, mu: np.ndarray, chunk: int = 256) -> np.ndarray:
    """``(2 pi)^{-1/2} sum_k h(k) e^{i k mu} dk`` for rows of ``h`` (same ``mu`` for all)."""
    dk = k[1] - k[0]
    pos = k >= 0
    kp = k[pos]
    w = np.where(kp == 0, 1.0, 2.0) * dk / math.sqrt(2 * math.pi)
    hp = np.atleast_2d(h)[:, pos] * w
    out = np.empty((hp.shape[0], len(mu)))
    for i in range(0, len(mu), chunk):
        ph = np.multiply.outer(kp, mu[i:i + chunk])
        out[:, i:i + chunk] = hp.real @ np.cos(ph) - hp.imag @ np.sin(ph)
    return out


def inverse_uniform(h: np.ndarray, k: np.ndarray, dmu: float) -> tuple[np.ndarray, np.ndarray]:
    """Same sum as :func:`_inverse` on a uniform ``mu`` grid by zero-padded FFT.

    The grid spacing is the largest ``2 pi / (M dk) <= dmu`` with a fast FFT
    length ``M``; ``mu`` covers one full period ``[-pi/dk, pi/dk)``.
    """
    h = np.atleast_2d(h)
    dk = k[1] - k[0]
    m = fft.next_fast_len(max(len(k), math.ceil(2 * math.pi / (dk * dmu))))
    step = 2 * math.pi / (m * dk)
    j = np.arange(-(m // 2), m - m // 2)
    mu = j * step
    # sum_n h_n e^{i (k0 + n dk) mu_j} = e^{i k0 mu_j} * m * ifft(h)[j mod m]
    raw = fft.ifft(h, n=m, axis=1) * m
    vals = raw[:, j % m] * np.exp(1j * k[0] * mu)[None, :]
    return mu, (vals.real * dk / math.sqrt(2 * math.pi))


def line_values(y: float, p: AsymptoticParams, t: float, mu: np.ndarray,
                k: np.ndarray | None = None) -> np.ndarray:
    """``u_y(mu, tau(y, t))`` on the requested ``mu`` points."""
    line = initial_spectrum(y, k, p.sigma)
    spec = line.h * _factor(line.k, tau(y, p, t), _diffusion_exponent(y, p, t))
    return _inverse(spec, line.k, np.asarray(mu, dtype=float))[0]


def _spread(tau_max, bt_min=0.0, level=1e12):
    """How far the dispersive tail reaches: group speed ``3 k^2`` at the largest live ``k``."""
    # wavenumbers that still carry weight after the Gaussian and diffusion factors
    k_sig = math.sqrt(8 * math.log(level) / (1 + 8 * bt_min))
    return 3 * k_sig**2 * abs(tau_max)


def _check_alias(k, tau_max, mu_ext, bt_min=0.0):
    dk = k[1] - k[0]
    period = 2 * math.pi / dk
    spread = _spread(tau_max, bt_min)
    if 2 * (mu_ext + spread) > period:
        raise KGridTooSmall(
            f"k spacing {dk:.3g} aliases at |mu| ~ {period / 2:.1f}; the solution spans "
            f"~{mu_ext + spread:.1f}"
        )


def reconstruct(p: AsymptoticParams, t: float, grid: PhaseGrid | None = None,
                variant: str = "combined", k: np.ndarray | None = None):
    """Reconstruct ``W~`` on a rescaled grid and the physical ``W``.

    ``variant`` is one of ``vacuum`` (sigma = 1, no decoherence), ``thermal``
    (no decoherence), ``damped`` (no dephasing) or ``combined``. Returns
    ``(W~ field, W field)``; the physical grid is the rescaled one mapped by
    ``x = sigma x~ / s`` and ``y = s sigma y~``.
    """
    if variant == "vacuum":
        p = AsymptoticParams(p.s, 1.0, p.g)
    elif variant == "thermal":
        p = AsymptoticParams(p.s, p.sigma, p.g)
    elif variant == "damped":
        p = AsymptoticParams(p.s, p.sigma, p.g, p.gamma_eff)
    elif variant != "combined":
        raise ValueError(f"unknown variant {variant!r}")
    grid = grid or PhaseGrid(301, 257, 4.0, 3.0)
    k = k_grid() if k is None else np.asarray(k, dtype=float)
    xs, ys = grid.xs, grid.ys
    h0 = initial_spectrum(0.0, k).h
    taus = tau(ys, p, t)
    bts = _diffusion_exponent(ys, p, t)
    shifts = 2 * p.g * p.sigma**2 * p.s**4 * ys**3 * t
    _check_alias(k, float(np.max(np.abs(taus))), float(np.max(np.abs(xs[:, None] - shifts[None, :]))))
    vals = np.empty((grid.n_x, grid.n_y))
    for j, y in enumerate(ys):
        spec = h0 * math.exp(-2 * y * y) * _factor(k, taus[j], bts[j])
        vals[:, j] = _inverse(spec, k, xs - shifts[j])[0]
    tilde = WignerField(grid, vals, t)
    phys = WignerField(PhaseGrid(grid.n_x, grid.n_y, p.sigma * grid.x_ext / p.s,
                                 p.s * p.sigma * grid.y_ext), vals / p.sigma**2, t)
    return tilde, phys


def airy_reference(f, tau_: float, mu, limit: float = 12.0) -> np.ndarray:
    """Solve ``d_tau u = d_mu^3 u`` by convolution with the Airy kernel.

    ``u(mu, tau) = (3 tau)^{-1/3} int f(xi) Ai((xi - mu) / (3 tau)^{1/3}) d xi``;
    ``f`` must be negligible outside ``|xi| <= limit``. Slow; used as a check.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if tau_ < 0:
        raise ValueError("tau must be >= 0")
    if tau_ == 0:
        return np.asarray([f(m) for m in mu])
    c = (3 * tau_) ** (1 / 3)
    out = np.empty(len(mu))
    for i, m in enumerate(mu):
        val, _ = integrate.quad(lambda xi: f(xi) * special.airy((xi - m) / c)[0], -limit, limit,
                                limit=400, epsabs=1e-13, epsrel=1e-11)
        out[i] = val / c
    return out


@dataclass(frozen=True)
class AsymptoticCurves:
    """Negativity against the scaled time ``g t s^4``."""

    scaled_times: np.ndarray
    n_vol: np.ndarray
    sigma2_n_peak: np.ndarray
    params: AsymptoticParams

    @property
    def n_peak(self) -> np.ndarray:
        return self.sigma2_n_peak / self.params.sigma**2

    @property
    def max_n_vol(self) -> float:
        return float(np.max(self.n_vol))

    @property
    def argmax_n_vol(self) -> float:
        return float(self.scaled_times[int(np.argmax(self.n_vol))])

    @property
    def max_sigma2_n_peak(self) -> float:
        return float(np.max(self.sigma2_n_peak))


def asymptotic_negativity(p: AsymptoticParams, scaled_times, n_lines: int = 257,
                          y_max: float = 3.0, dmu: float = 0.02, mu_ext: float | None = None,
                          k: np.ndarray | None = None) -> AsymptoticCurves:
    """``N_vol`` and ``sigma^2 N_peak`` on the ``(mu, y~)`` representation.

    The per-line shift in ``x~`` does not change either measure and is left out.
    Lines ``y~ > 0`` are computed and doubled; the ``y~ = 0`` line stays Gaussian.
    """
    if not p.valid:
        warnings.warn(f"s/sigma = {p.validity_ratio:.2f}; the large-squeezing "
                      "approximation is poor here", RuntimeWarning, stacklevel=2)
    auto_k = k is None
    k = k_grid() if auto_k else np.asarray(k, dtype=float)
    initial_spectrum(0.0, k)  # k-range check
    scaled_times = np.atleast_1d(np.asarray(scaled_times, dtype=float))
    ys = y_lines(n_lines, y_max)
    dy = ys[1] - ys[0]
    ypos = ys[ys > 0]
    nv = np.zeros(len(scaled_times))
    npk = np.zeros(len(scaled_times))
    for i, T in enumerate(scaled_times):
        t = p.time(T)
        taus = tau(ypos, p, t)
        bts = _diffusion_exponent(ypos, p, t)
        ext = mu_ext
        if ext is None:
            ext = 6.0 + _spread(float(np.max(taus)), float(np.min(bts)))
        kk = k
        if auto_k:
            # keep the Fourier period comfortably wider than the window
            kk = k_grid(float(np.max(k)), min(k[1] - k[0], 2 * math.pi / (2.2 * ext)))
        _check_alias(kk, float(np.max(taus)), 6.0, float(np.min(bts)))
        h = (1 / math.pi) * np.exp(-kk * kk / 8)
        spec = (h[None, :] * np.exp(-2 * ypos[:, None] ** 2)) * _factor(kk, taus, bts)
        mu, u = inverse_uniform(spec, kk, dmu)
        u = u[:, np.abs(mu) <= ext]
        step = mu[1] - mu[0]
        neg = np.minimum(u, 0.0)
        nv[i] = -2 * neg.sum() * step * dy
        npk[i] = -neg.min() if neg.size else 0.0
    return AsymptoticCurves(scaled_times, nv, npk, p)
