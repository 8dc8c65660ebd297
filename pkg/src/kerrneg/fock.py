"""States and operators in a truncated number basis |0>, ..., |N-1>."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, sqrtm
from scipy.special import gammaln

from .errors import DimMismatch, TruncationError
from .gaussian import GaussianSpec

__all__ = [
    "TAIL_THRESHOLD",
    "StateSpec",
    "ladder_operators",
    "number_operator",
    "quadratures",
    "displace",
    "squeeze",
    "rotate",
    "transformation",
    "tail_mass",
    "check_truncation",
    "vacuum",
    "number_state",
    "coherent_vector",
    "coherent_state",
    "squeezed_vacuum_vector",
    "squeezed_vacuum",
    "thermal_state",
    "gaussian_state",
    "make_state",
    "auto_dim",
    "basis_size",
    "expectation",
    "quadrature_moments",
    "fidelity",
    "is_density_matrix",
]

TAIL_THRESHOLD = 1e-8
TAIL_WIDTH = 5


def ladder_operators(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices; ``<m|a|n> = sqrt(n) delta_{m,n-1}``."""
    if n < 1:
        raise ValueError("basis size must be >= 1")
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return a, a.conj().T


def number_operator(n: int) -> np.ndarray:
    return np.diag(np.arange(n, dtype=float)).astype(complex)


def quadratures(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``X = (a + a^dag)/2`` and ``Y = (a - a^dag)/(2i)``."""
    a, ad = ladder_operators(n)
    return (a + ad) / 2, (a - ad) / 2j


def tail_mass(state: np.ndarray, width: int = TAIL_WIDTH) -> float:
    """Population in the top ``width`` basis states of a vector or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.sum(np.abs(state[-width:]) ** 2))
    return float(np.sum(np.real(np.diag(state)[-width:])))


def check_truncation(state: np.ndarray, threshold: float = TAIL_THRESHOLD) -> None:
    tail = tail_mass(state)
    if tail >= threshold:
        n = len(state)
        raise TruncationError(
            f"population {tail:.3e} in the top {TAIL_WIDTH} of {n} basis states "
            f"exceeds {threshold:.1e}"
        )


def _checked_unitary(u: np.ndarray, check: bool) -> np.ndarray:
    if check:
        check_truncation(u[:, 0])
    return u


def displace(n: int, lam: complex, check: bool = True) -> np.ndarray:
    """``D(lam) = exp(lam a^dag - lam^* a)`` by dense matrix exponential."""
    a, ad = ladder_operators(n)
    return _checked_unitary(expm(lam * ad - np.conj(lam) * a), check)


def squeeze(n: int, xi: complex, check: bool = True) -> np.ndarray:
    """``S(xi) = exp((xi^* a a - xi a^dag a^dag)/2)`` by dense matrix exponential."""
    a, ad = ladder_operators(n)
    return _checked_unitary(expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad)), check)


def rotate(n: int, phi: float) -> np.ndarray:
    """``R(phi) = exp(i n phi)``; diagonal, so exact."""
    return np.diag(np.exp(1j * phi * np.arange(n)))


def transformation(n: int, kind: str, param, check: bool = True) -> np.ndarray:
    """Dispatch to :func:`displace`, :func:`squeeze` or :func:`rotate`."""
    if kind == "displace":
        return displace(n, param, check)
    if kind == "squeeze":
        return squeeze(n, param, check)
    if kind == "rotate":
        return rotate(n, param)
    raise ValueError(f"unknown transformation {kind!r}")


def _pure(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def _accept(rho: np.ndarray, threshold: float) -> np.ndarray:
    check_truncation(rho, threshold)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.real(np.trace(rho))


def vacuum(n: int) -> np.ndarray:
    return number_state(n, 0)


def number_state(n: int, k: int) -> np.ndarray:
    if not 0 <= k < n:
        raise TruncationError(f"|{k}> is outside a basis of size {n}")
    rho = np.zeros((n, n), dtype=complex)
    rho[k, k] = 1.0
    return rho


def coherent_vector(n: int, alpha: complex) -> np.ndarray:
    """``exp(-|alpha|^2/2) alpha^k / sqrt(k!)`` evaluated in log space."""
    k = np.arange(n)
    if alpha == 0:
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * abs(alpha) ** 2 + k * math.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    return np.exp(logmag) * np.exp(1j * k * np.angle(alpha))


def coherent_state(n: int, alpha: complex, threshold: float = TAIL_THRESHOLD) -> np.ndarray:
    return _accept(_pure(coherent_vector(n, alpha)), threshold)


def squeezed_vacuum_vector(n: int, xi: complex) -> np.ndarray:
    """Number-basis expansion of ``S(xi)|0>``; only even components are nonzero."""
    r, theta = abs(xi), np.angle(xi)
    out = np.zeros(n, dtype=complex)
    if r == 0:
        out[0] = 1.0
        return out
    m = np.arange((n + 1) // 2)
    logc = (
        -0.5 * math.log(math.cosh(r))
        + 0.5 * gammaln(2 * m + 1)
        - m * math.log(2)
        - gammaln(m + 1)
        + m * math.log(math.tanh(r))
    )
    out[2 * m] = (-1.0) ** m * np.exp(logc) * np.exp(1j * m * theta)
    return out


def squeezed_vacuum(n: int, xi: complex, threshold: float = TAIL_THRESHOLD) -> np.ndarray:
    return _accept(_pure(squeezed_vacuum_vector(n, xi)), threshold)


def thermal_state(n: int, nbar: float, threshold: float = TAIL_THRESHOLD) -> np.ndarray:
    """Boltzmann populations normalised over the truncated basis."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0:
        return vacuum(n)
    logp = np.arange(n) * math.log(nbar / (nbar + 1))
    p = np.exp(logp - logp.max())
    p /= p.sum()
    return _accept(np.diag(p).astype(complex), threshold)


def gaussian_state(n: int, spec: GaussianSpec, threshold: float = TAIL_THRESHOLD,
                   pad: int | None = None) -> np.ndarray:
    """``D S rho_th S^dag D^dag`` built in a padded basis and cut back to ``n``.

    Working in ``n + pad`` states keeps the truncation damage of the matrix
    exponentials away from the retained block.
    """
    if pad is None:
        pad = max(20, n // 2)
    m = n + pad
    if spec.nbar0 == 0:
        rho = vacuum(m)
    else:
        logp = np.arange(m) * math.log(spec.nbar0 / (spec.nbar0 + 1))
        p = np.exp(logp)
        rho = np.diag(p / p.sum()).astype(complex)
    if spec.r0 > 0:
        s = squeeze(m, spec.xi, check=False)
        rho = s @ rho @ s.conj().T
    if spec.alpha0 != 0:
        d = displace(m, spec.alpha0, check=False)
        rho = d @ rho @ d.conj().T
    return _accept(rho[:n, :n], threshold)


@dataclass(frozen=True)
class StateSpec:
    """Declarative initial state used by :func:`make_state` and the harness.

    ``kind`` is one of ``vacuum``, ``number``, ``coherent``, ``squeezed_vacuum``,
    ``thermal``, ``squeezed_thermal`` or ``gaussian``.
    """

    kind: str
    n: int = 0
    alpha0: complex = 0j
    r0: float = 0.0
    theta0: float = 0.0
    nbar0: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def gaussian(self) -> GaussianSpec:
        return GaussianSpec(self.nbar0, self.r0, self.theta0, self.alpha0)


def make_state(n: int, spec: StateSpec, threshold: float = TAIL_THRESHOLD) -> np.ndarray:
    kind = spec.kind
    if kind == "vacuum":
        return vacuum(n)
    if kind == "number":
        return number_state(n, spec.n)
    if kind == "coherent":
        return coherent_state(n, spec.alpha0, threshold)
    if kind == "squeezed_vacuum":
        return squeezed_vacuum(n, spec.r0 * np.exp(1j * spec.theta0), threshold)
    if kind == "thermal":
        return thermal_state(n, spec.nbar0, threshold)
    if kind in ("squeezed_thermal", "gaussian"):
        g = spec.gaussian()
        if kind == "squeezed_thermal":
            g = GaussianSpec(g.nbar0, g.r0, g.theta0, 0j)
        return gaussian_state(n, g, threshold)
    raise ValueError(f"unknown state kind {kind!r}")


def basis_size(r0: float = 0.0, alpha0: complex = 0j) -> int:
    """Starting basis size ``max(40, ceil(12 sinh^2 r0 + 8 |alpha0|^2 + 20))``."""
    return max(40, math.ceil(12 * math.sinh(r0) ** 2 + 8 * abs(alpha0) ** 2 + 20))


def auto_dim(spec: StateSpec, threshold: float = TAIL_THRESHOLD, start: int | None = None,
             growth: float = 1.25, cap: int = 2000) -> tuple[int, np.ndarray]:
    """Smallest basis from the growth sequence whose state passes the tail check."""
    if spec.kind == "number":
        n = max(40, spec.n + TAIL_WIDTH + 1) if start is None else start
    else:
        n = start or basis_size(spec.r0, spec.alpha0)
    while True:
        try:
            return n, make_state(n, spec, threshold)
        except TruncationError:
            if n >= cap:
                raise
            n = min(cap, math.ceil(n * growth))


def _same_dim(op: np.ndarray, rho: np.ndarray) -> None:
    if op.shape != rho.shape:
        raise DimMismatch(f"operator {op.shape} vs state {rho.shape}")


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """``Tr[rho op]``."""
    _same_dim(op, rho)
    return complex(np.einsum("ij,ji->", rho, op))


def quadrature_moments(rho: np.ndarray) -> dict:
    """Means, variances and covariance of ``X`` and ``Y``."""
    x, y = quadratures(len(rho))
    mx = expectation(x, rho).real
    my = expectation(y, rho).real
    xx = expectation(x @ x, rho).real
    yy = expectation(y @ y, rho).real
    xy = expectation(0.5 * (x @ y + y @ x), rho).real
    return {
        "mean_x": mx,
        "mean_y": my,
        "var_x": xx - mx * mx,
        "var_y": yy - my * my,
        "cov_xy": xy - mx * my,
        "x2": xx,
        "y2": yy,
    }


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """Uhlmann fidelity; a 1-D ``target`` is treated as a pure state."""
    if target.ndim == 1:
        if len(target) != len(rho):
            raise DimMismatch(f"vector {target.shape} vs state {rho.shape}")
        return float(np.real(target.conj() @ rho @ target))
    _same_dim(rho, target)
    sr = sqrtm(rho)
    return float(np.real(np.trace(sqrtm(sr @ target @ sr))) ** 2)


def is_density_matrix(rho: np.ndarray, herm_tol=1e-12, trace_tol=1e-10, psd_tol=1e-8) -> bool:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        return False
    if abs(np.trace(rho) - 1) > trace_tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -psd_tol)
