"""Wigner functions on phase-space grids, negativity measures and related fields."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve
from scipy.special import erfc, gammaln

from . import _wigner_kernels as _k
from .errors import GridTooCoarse, GridTooSmall, NonHermitianInput, TruncationError
from .fock import TAIL_THRESHOLD, coherent_vector, quadrature_moments, tail_mass

__all__ = [
    "PhaseGrid",
    "WignerField",
    "NegativityReport",
    "KerrCurrent",
    "transition_probability",
    "wigner_point",
    "wigner_grid",
    "wigner_on_grid",
    "default_grid",
    "fitted_grid",
    "grid_tail_mass",
    "negativity",
    "refined_negativity",
    "adaptive_negativity",
    "q_function",
    "smoothed_wigner",
    "overlap",
    "kerr_current",
    "wigner_rhs",
    "BOUND",
]

BOUND = 2.0 / math.pi
GRID_TAIL = 1e-6
MAX_SPACING = 0.05


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid symmetric about the origin: ``x_i = -x_ext + i dx``."""

    n_x: int
    n_y: int
    x_ext: float
    y_ext: float

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2:
            raise ValueError("grids need at least two points per axis")
        if not (self.x_ext > 0 and self.y_ext > 0):
            raise ValueError("grid extents must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.x_ext / (self.n_x - 1)

    @property
    def dy(self) -> float:
        return 2 * self.y_ext / (self.n_y - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(-self.x_ext, self.x_ext, self.n_x)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(-self.y_ext, self.y_ext, self.n_y)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def refined(self) -> "PhaseGrid":
        """Halve the spacing while keeping every existing node."""
        return PhaseGrid(2 * self.n_x - 1, 2 * self.n_y - 1, self.x_ext, self.y_ext)

    @classmethod
    def square(cls, ext: float, n: int = 301) -> "PhaseGrid":
        return cls(n, n, ext, ext)


@dataclass(frozen=True)
class WignerField:
    """Samples ``values[i, j] = W(xs[i], ys[j])``."""

    grid: PhaseGrid
    values: np.ndarray
    t: float = 0.0

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.dx * self.grid.dy)

    def bounds_ok(self, tol: float = 1e-6) -> bool:
        return bool(np.max(np.abs(self.values)) <= BOUND + tol)

    # -- serialization

    def to_csv(self, path) -> None:
        xx, yy = self.grid.mesh()
        data = np.column_stack([xx.ravel(), yy.ravel(), self.values.ravel()])
        np.savetxt(path, data, fmt="%.12g", delimiter=",", header="x,y,W", comments="")

    @classmethod
    def from_csv(cls, path, t: float = 0.0) -> "WignerField":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        grid = PhaseGrid(len(xs), len(ys), float(xs[-1]), float(ys[-1]))
        return cls(grid, data[:, 2].reshape(len(xs), len(ys)), t)

    _HEADER = struct.Struct("<qqdddddq")

    def to_binary(self, path) -> None:
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(self._HEADER.pack(g.n_x, g.n_y, g.x_ext, g.y_ext, g.dx, g.dy, self.t, 0))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "WignerField":
        raw = Path(path).read_bytes()
        n_x, n_y, x_ext, y_ext, _dx, _dy, t, _ = cls._HEADER.unpack_from(raw)
        vals = np.frombuffer(raw, dtype="<f8", offset=cls._HEADER.size).reshape(n_x, n_y)
        return cls(PhaseGrid(n_x, n_y, x_ext, y_ext), vals.copy(), t)


@dataclass(frozen=True)
class NegativityReport:
    n_vol: float
    n_peak: float
    grid: PhaseGrid
    converged: bool = True
    history: tuple = field(default_factory=tuple)


# -- single elements and points ---------------------------------------------------


def transition_probability(m: int, n: int, alpha: complex) -> complex:
    """Wigner function of the operator ``|m><n|`` at ``alpha``."""
    if m < 0 or n < 0:
        raise IndexError(f"number-state indices must be >= 0, got ({m}, {n})")
    r, phi = abs(alpha), float(np.angle(alpha))
    if n >= m:
        return complex(_k.transition_value(m, n, r, phi))
    return complex(np.conj(_k.transition_value(n, m, r, phi)))


def _hermitian(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    dev = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    if dev > tol:
        raise NonHermitianInput(f"rho deviates from Hermitian by {dev:.2e}")
    return rho


def _pack(rho: np.ndarray, lower: bool = False):
    """Concatenated non-zero diagonals of ``rho`` (or of ``rho.T`` when ``lower``)."""
    n = rho.shape[0]
    src = rho.T if lower else rho
    offsets, chunks = [], []
    for k in range(n):
        d = np.diagonal(src, k)
        if np.any(d != 0):
            offsets.append(k)
            chunks.append(d)
    if not offsets:
        offsets, chunks = [0], [np.zeros(n, dtype=complex)]
    starts = np.concatenate([[0], np.cumsum([len(c) for c in chunks])]).astype(np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    return (
        np.ascontiguousarray(np.concatenate(chunks), dtype=np.complex128),
        offsets,
        starts,
        gammaln(offsets + 1.0),
    )


def wigner_point(rho: np.ndarray, alpha: complex) -> float:
    """``sum_mn rho_mn W_{|m><n|}(alpha)``; the imaginary part is checked, then dropped."""
    rho = _hermitian(rho)
    r, phi = abs(alpha), float(np.angle(alpha))
    up_args = _pack(rho)
    lo_args = _pack(rho, lower=True)
    up = _k.point_components(*up_args, r)
    lo = _k.point_components(*lo_args, r)
    total = np.sum(up * np.exp(1j * up_args[1] * phi))
    # strictly lower part: rho[m+k, m] W_{|m+k><m|} = rho[m+k, m] g e^{-ik phi}
    mask = lo_args[1] > 0
    total += np.sum(lo[mask] * np.exp(-1j * lo_args[1][mask] * phi))
    if abs(total.imag) > 1e-8:
        raise NonHermitianInput(f"Wigner value has imaginary part {total.imag:.2e}")
    return float(total.real)


# -- grids ----------------------------------------------------------------------


def _moments(rho):
    m = quadrature_moments(rho)
    return m["mean_x"], m["mean_y"], math.sqrt(max(m["var_x"], 0.0)), math.sqrt(max(m["var_y"], 0.0)), m


def grid_tail_mass(rho: np.ndarray, grid: PhaseGrid) -> float:
    """Gaussian-envelope estimate of the probability outside ``grid``."""
    mx, my, sx, sy, _ = _moments(rho)
    out = 0.0
    for mean, sd, ext in ((mx, sx, grid.x_ext), (my, sy, grid.y_ext)):
        if sd == 0:
            continue
        out += 0.5 * erfc((ext - mean) / (math.sqrt(2) * sd))
        out += 0.5 * erfc((ext + mean) / (math.sqrt(2) * sd))
    return float(out)


def default_grid(rho: np.ndarray, n: int = 301) -> PhaseGrid:
    """Square grid with half-extent ``4 max(rms x, rms y) + 2``.

    The extent is widened when needed so that the Gaussian-envelope tail
    stays below the :func:`wigner_grid` threshold.
    """
    mx, my, sx, sy, m = _moments(rho)
    spread = math.sqrt(max(m["x2"], m["y2"], 0.0))
    ext = 4 * spread + 2
    shift = max(abs(mx), abs(my))
    # ~5.03 sd keeps a two-sided Gaussian tail under 1e-6 per axis pair
    ext = max(ext, shift + 5.1 * max(sx, sy))
    return PhaseGrid(n, n, ext, ext)


def fitted_grid(rho: np.ndarray, n_x: int = 101, n_y: int = 101, width: float = 5.5) -> PhaseGrid:
    """Axis-aligned grid of ``|mean| + width * sd`` per axis; suits squeezed states."""
    mx, my, sx, sy, _ = _moments(rho)
    return PhaseGrid(n_x | 1, n_y | 1, abs(mx) + width * sx, abs(my) + width * sy)


def _set_threads(threads):
    if threads:
        numba.set_num_threads(min(int(threads), numba.config.NUMBA_NUM_THREADS))


def wigner_on_grid(rho: np.ndarray, grid: PhaseGrid, threads: int | None = None) -> np.ndarray:
    """Raw kernel call without envelope checks; returns the value array."""
    rho = _hermitian(rho)
    diags, offsets, starts, lgk = _pack(rho)
    xs, ys = grid.xs, grid.ys
    # snap the symmetric node arrays so mirrored points are exact negatives
    xs = 0.5 * (xs - xs[::-1])
    ys = 0.5 * (ys - ys[::-1])
    ix0 = grid.n_x // 2
    iy0 = grid.n_y // 2
    out = np.empty((grid.n_x, grid.n_y))
    _set_threads(threads)
    tab_a, tab_b = _k.recurrence_tables(offsets, starts)
    _k.grid_quarter(diags, offsets, starts, lgk, tab_a, tab_b, xs, ys, ix0, iy0, out)
    return out


def wigner_grid(rho: np.ndarray, grid: PhaseGrid | None = None, *, threads: int | None = None,
                check: bool = True, t: float = 0.0) -> WignerField:
    """Evaluate ``W`` at every node of ``grid`` (default: :func:`default_grid`)."""
    rho = _hermitian(rho)
    grid = grid or default_grid(rho)
    if check:
        tail = grid_tail_mass(rho, grid)
        if tail > GRID_TAIL:
            raise GridTooSmall(
                f"estimated mass {tail:.2e} outside grid (x_ext={grid.x_ext:.3g}, "
                f"y_ext={grid.y_ext:.3g})"
            )
    return WignerField(grid, wigner_on_grid(rho, grid, threads), t)


# -- negativity -----------------------------------------------------------------


def negativity(field: WignerField) -> NegativityReport:
    """Riemann-sum negative volume and the most negative node value."""
    neg = np.minimum(field.values, 0.0)
    n_vol = float(-neg.sum() * field.grid.dx * field.grid.dy)
    n_peak = float(-neg.min()) if neg.size else 0.0
    return NegativityReport(n_vol, n_peak, field.grid, True, ((field.grid.n_x, field.grid.n_y, n_vol, n_peak),))


def refined_negativity(rho: np.ndarray, grid: PhaseGrid | None = None, rel_tol: float = 1e-3,
                       abs_tol: float = 1e-9, max_levels: int = 3,
                       threads: int | None = None) -> NegativityReport:
    """Negativity with grid doubling until ``N_vol`` settles."""
    grid = grid or default_grid(rho)
    rep = negativity(wigner_grid(rho, grid, threads=threads))
    history = list(rep.history)
    for _ in range(max_levels):
        grid = grid.refined()
        new = negativity(wigner_grid(rho, grid, threads=threads, check=False))
        history.extend(new.history)
        change = abs(new.n_vol - rep.n_vol)
        rep = new
        if change <= max(rel_tol * new.n_vol, abs_tol):
            return NegativityReport(rep.n_vol, rep.n_peak, grid, True, tuple(history))
    return NegativityReport(rep.n_vol, rep.n_peak, grid, False, tuple(history))


def _widen(grid: PhaseGrid, along_x: bool, along_y: bool, growth: float) -> PhaseGrid:
    n_x, x_ext, n_y, y_ext = grid.n_x, grid.x_ext, grid.n_y, grid.y_ext
    if along_x:
        half = math.ceil(growth * x_ext / grid.dx)
        n_x, x_ext = 2 * half + 1, half * grid.dx
    if along_y:
        half = math.ceil(growth * y_ext / grid.dy)
        n_y, y_ext = 2 * half + 1, half * grid.dy
    return PhaseGrid(n_x, n_y, x_ext, y_ext)


def adaptive_negativity(rho: np.ndarray, grid: PhaseGrid | None = None, *, edge_tol: float = 1e-4,
                        rel_tol: float = 1e-2, abs_tol: float = 1e-7, growth: float = 1.5,
                        max_expand: int = 6, max_refine: int = 2,
                        threads: int | None = None) -> NegativityReport:
    """Negativity on a grid that is widened and refined until it stops mattering.

    An axis is widened (same spacing) while ``|W|`` on its boundary exceeds
    ``edge_tol * max|W|``. Resolution is judged per axis by recomputing
    ``N_vol`` from every second node along that axis; an axis whose estimate
    moves by more than ``rel_tol`` (or ``abs_tol``) has its spacing halved.
    ``history`` rows are ``(n_x, n_y, x_ext, y_ext, n_vol, n_peak, n_vol_coarse)``
    with ``n_vol_coarse`` the worse of the two per-axis estimates.
    """
    rho = _hermitian(rho)
    grid = grid or fitted_grid(rho)
    history = []
    expanded = refined = 0
    while True:
        w = wigner_on_grid(rho, grid, threads)
        neg = np.minimum(w, 0.0)
        cell = grid.dx * grid.dy
        n_vol = float(-neg.sum() * cell)
        n_peak = float(-neg.min())
        half_x = float(-neg[::2, :].sum() * 2 * cell)
        half_y = float(-neg[:, ::2].sum() * 2 * cell)
        coarse = half_x if abs(half_x - n_vol) >= abs(half_y - n_vol) else half_y
        history.append((grid.n_x, grid.n_y, grid.x_ext, grid.y_ext, n_vol, n_peak, coarse))
        top = float(np.abs(w).max())
        wide_x = max(np.abs(w[0]).max(), np.abs(w[-1]).max()) > edge_tol * top
        wide_y = max(np.abs(w[:, 0]).max(), np.abs(w[:, -1]).max()) > edge_tol * top
        if (wide_x or wide_y) and expanded < max_expand:
            grid = _widen(grid, wide_x, wide_y, growth)
            expanded += 1
            continue
        tol = max(rel_tol * n_vol, abs_tol)
        fine_x = abs(n_vol - half_x) <= tol
        fine_y = abs(n_vol - half_y) <= tol
        if not (fine_x and fine_y) and refined < max_refine:
            grid = PhaseGrid(grid.n_x if fine_x else 2 * grid.n_x - 1,
                             grid.n_y if fine_y else 2 * grid.n_y - 1, grid.x_ext, grid.y_ext)
            refined += 1
            continue
        ok = fine_x and fine_y and not (wide_x or wide_y)
        return NegativityReport(n_vol, n_peak, grid, ok, tuple(history))


# -- Q function and smoothing ---------------------------------------------------


def q_function(rho: np.ndarray, alpha: complex, threshold: float = TAIL_THRESHOLD) -> float:
    """Husimi function ``<alpha|rho|alpha>/pi`` (integrates to one)."""
    rho = _hermitian(rho)
    v = coherent_vector(rho.shape[0], alpha)
    tail = tail_mass(v)
    if tail >= threshold:
        raise TruncationError(f"|alpha={alpha}> has tail {tail:.2e} in a basis of {len(v)}")
    return float(np.real(v.conj() @ rho @ v)) / math.pi


def smoothed_wigner(field: WignerField) -> WignerField:
    """Convolve ``W`` with the vacuum Wigner function; gives the Q function on the grid."""
    g = field.grid
    kx = np.arange(-(g.n_x // 2), g.n_x // 2 + 1) * g.dx
    ky = np.arange(-(g.n_y // 2), g.n_y // 2 + 1) * g.dy
    kern = (2 / math.pi) * np.exp(-2 * (kx[:, None] ** 2 + ky[None, :] ** 2))
    q = fftconvolve(field.values, kern, mode="same") * g.dx * g.dy
    return WignerField(g, q, field.t)


def overlap(a: WignerField, b: WignerField) -> float:
    """``Tr[rho sigma] = pi * integral W_rho W_sigma``."""
    if a.grid != b.grid:
        raise ValueError("fields must share a grid")
    return float(math.pi * np.sum(a.values * b.values) * a.grid.dx * a.grid.dy)


# -- phase-space flows ----------------------------------------------------------


def _spectral_ops(grid: PhaseGrid):
    kx = 2 * np.pi * np.fft.fftfreq(grid.n_x, d=grid.dx)
    ky = 2 * np.pi * np.fft.fftfreq(grid.n_y, d=grid.dy)
    return kx[:, None], ky[None, :]


def _deriv(values, grid, order_x, order_y, method):
    if method == "spectral":
        kx, ky = _spectral_ops(grid)
        f = np.fft.fft2(values)
        f *= (1j * kx) ** order_x * (1j * ky) ** order_y
        return np.fft.ifft2(f).real
    out = values
    for _ in range(order_x):
        out = np.gradient(out, grid.dx, axis=0, edge_order=2)
    for _ in range(order_y):
        out = np.gradient(out, grid.dy, axis=1, edge_order=2)
    return out


def _laplacian(values, grid, method):
    if method == "spectral":
        return _deriv(values, grid, 2, 0, method) + _deriv(values, grid, 0, 2, method)
    lap = np.zeros_like(values)
    v = values
    lap[1:-1, :] += (v[2:, :] - 2 * v[1:-1, :] + v[:-2, :]) / grid.dx**2
    lap[:, 1:-1] += (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / grid.dy**2
    return lap


@dataclass(frozen=True)
class KerrCurrent:
    """Azimuthal probability current of the Kerr flow.

    ``j_x, j_y`` are the Cartesian components, ``j_phi`` the azimuthal one
    (the radial part vanishes). ``dw_dt = -div J``. ``ring_rates`` holds the
    rate of change of ``r * integral W dphi`` on the rings in ``ring_radii``.
    """

    grid: PhaseGrid
    j_x: np.ndarray
    j_y: np.ndarray
    j_phi: np.ndarray
    dw_dt: np.ndarray
    ring_radii: np.ndarray
    ring_rates: np.ndarray
    interior: tuple


def _check_spacing(grid: PhaseGrid):
    if max(grid.dx, grid.dy) > MAX_SPACING:
        raise GridTooCoarse(
            f"spacing ({grid.dx:.3g}, {grid.dy:.3g}) exceeds {MAX_SPACING} for the Laplacian"
        )


def _ring_rates(grid, dw, radii, n_phi=720):
    interp = RegularGridInterpolator((grid.xs, grid.ys), dw, bounds_error=False, fill_value=0.0)
    phis = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    out = []
    for r in radii:
        pts = np.column_stack([r * np.cos(phis), r * np.sin(phis)])
        out.append(r * interp(pts).mean() * 2 * np.pi)
    return np.asarray(out)


def kerr_current(field: WignerField, g: float, method: str = "spectral",
                 ring_radii=None) -> KerrCurrent:
    """``J = (-2g(r^2 - 1) W + (g/8) lap W) (-y, x)`` and its divergence.

    ``method`` selects Fourier (``"spectral"``, default) or second-order
    central (``"central"``) derivatives.
    """
    if method not in ("spectral", "central"):
        raise ValueError(f"unknown derivative method {method!r}")
    grid = field.grid
    _check_spacing(grid)
    w = field.values
    xx, yy = grid.mesh()
    f = -2 * g * (xx**2 + yy**2 - 1) * w + (g / 8) * _laplacian(w, grid, method)
    jx = -yy * f
    jy = xx * f
    r = np.hypot(xx, yy)
    div = _deriv(jx, grid, 1, 0, method) + _deriv(jy, grid, 0, 1, method)
    dw = -div
    interior = (slice(1, -1), slice(1, -1)) if method == "central" else (slice(None), slice(None))
    if ring_radii is None:
        rmax = 0.8 * min(grid.x_ext, grid.y_ext)
        ring_radii = np.linspace(0.1, rmax, 8)
    ring_radii = np.asarray(ring_radii, dtype=float)
    return KerrCurrent(grid, jx, jy, f * r, dw, ring_radii, _ring_rates(grid, dw, ring_radii),
                       interior)


def wigner_rhs(field: WignerField, g: float = 0.0, gamma: float = 0.0, nbar: float = 0.0,
               gamma_phi: float = 0.0, method: str = "spectral") -> np.ndarray:
    """Phase-space right-hand side ``dW/dt`` of the master equation (no drive).

    Kerr: ``-d_phi f`` with ``f`` as in :func:`kerr_current`; damping:
    ``(gamma/2) div(r W) + gamma (2 nbar + 1)/8 lap W``; dephasing:
    ``(gamma_phi/2) d_phi^2 W`` with ``d_phi = x d_y - y d_x``.
    """
    grid = field.grid
    w = field.values
    xx, yy = grid.mesh()
    out = np.zeros_like(w)

    def dphi(v):
        return xx * _deriv(v, grid, 0, 1, method) - yy * _deriv(v, grid, 1, 0, method)

    if g:
        f = -2 * g * (xx**2 + yy**2 - 1) * w + (g / 8) * _laplacian(w, grid, method)
        out -= dphi(f)
    if gamma:
        out += 0.5 * gamma * (_deriv(xx * w, grid, 1, 0, method) + _deriv(yy * w, grid, 0, 1, method))
        out += gamma * (2 * nbar + 1) / 8 * _laplacian(w, grid, method)
    if gamma_phi:
        out += 0.5 * gamma_phi * dphi(dphi(w))
    return out
