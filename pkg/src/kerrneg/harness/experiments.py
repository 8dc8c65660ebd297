"""Experiment drivers behind ``kerrneg run``.

Each driver takes a validated config and returns ``(tables, summary)``.
Scaled experiments fix ``g = 1`` and measure time as ``g t s^4``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .. import asymptotic as asy
from .. import dynamics as dy
from .. import fock
from .. import gaussian as gs
from .. import wigner as wg
from ..errors import ConfigError
from .config import GridConfig, MaxSearch, SolverConfig
from .io import Table

__all__ = [
    "squeezed_kerr_state",
    "initial_state",
    "measure",
    "StatePath",
    "MaxResult",
    "maximize_negativity",
    "two_stage_decay",
    "coherent_grid",
    "additive_residual",
    "axis_residual",
    "DRIVERS",
]


# -- building blocks ------------------------------------------------------------


def initial_state(spec: fock.StateSpec, solver: SolverConfig) -> np.ndarray:
    """State in a basis picked by the tail check (or the fixed ``basis_size``)."""
    if solver.basis_size is not None:
        return fock.make_state(solver.basis_size, spec, solver.basis_tail)
    return fock.auto_dim(spec, threshold=solver.basis_tail)[1]


def squeezed_state(r0: float, nbar0: float, solver: SolverConfig) -> np.ndarray:
    kind = "squeezed_thermal" if nbar0 > 0 else "squeezed_vacuum"
    return initial_state(fock.StateSpec(kind, r0=r0, nbar0=nbar0), solver)


def squeezed_kerr_state(r0: float, tau0: float, solver: SolverConfig | None = None,
                        nbar0: float = 0.0, g: float = 1.0) -> np.ndarray:
    """Squeezed (thermal) vacuum after unitary Kerr evolution to ``g t s^4 = tau0``."""
    solver = solver or SolverConfig()
    rho = squeezed_state(r0, nbar0, solver)
    return dy.apply_kerr(rho, g, tau0 / (g * math.exp(4 * r0)))


def _merge(prev: wg.PhaseGrid | None, new: wg.PhaseGrid) -> wg.PhaseGrid:
    if prev is None:
        return new
    dx, dy_ = min(prev.dx, new.dx), min(prev.dy, new.dy)
    hx = math.ceil(max(prev.x_ext, new.x_ext) / dx)
    hy = math.ceil(max(prev.y_ext, new.y_ext) / dy_)
    return wg.PhaseGrid(2 * hx + 1, 2 * hy + 1, hx * dx, hy * dy_)


def measure(rho: np.ndarray, cfg: GridConfig, prev: wg.PhaseGrid | None = None,
            threads: int | None = None) -> wg.NegativityReport:
    """Negativity with the configured grid policy.

    Adaptive grids start from the union of the fitted grid and ``prev`` (the
    grid that worked for the previous point of a series).
    """
    start = cfg.start()
    if cfg.mode == "fixed":
        return wg.adaptive_negativity(rho, start, edge_tol=cfg.edge_tol, rel_tol=cfg.rel_tol,
                                      abs_tol=cfg.abs_tol, max_expand=0, max_refine=0,
                                      threads=threads)
    if start is None:
        start = wg.fitted_grid(rho, cfg.n_x, cfg.n_y)
    return wg.adaptive_negativity(rho, _merge(prev, start), edge_tol=cfg.edge_tol,
                                  rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                                  max_refine=cfg.max_refine, threads=threads)


class StatePath:
    """States along one trajectory, either exact Kerr phases or the master equation.

    ``states(ts)`` runs the integrator once over increasing times and keeps the
    results as checkpoints; ``state(t)`` restarts from the nearest earlier one.
    """

    def __init__(self, rho0: np.ndarray, params: dy.ModelParams, solver: SolverConfig):
        self.rho0 = rho0
        self.params = params
        self.solver = solver
        self.unitary = (params.gamma == 0 and params.gamma_phi == 0 and params.eta == 0
                        and params.omega == 0)
        self._checkpoints: dict[float, np.ndarray] = {0.0: rho0}
        self.stats: list[dict] = []

    def states(self, ts) -> list[np.ndarray]:
        ts = np.asarray(ts, dtype=float)
        if self.unitary:
            return [dy.apply_kerr(self.rho0, self.params.g, t) for t in ts]
        grid = ts if ts[0] == 0 else np.concatenate([[0.0], ts])
        traj = dy.evolve(self.rho0, self.params, grid, self.solver.tolerances(),
                         tail_threshold=self.solver.evolve_tail)
        self.stats.append(traj.solver_stats)
        out = traj.states if ts[0] == 0 else traj.states[1:]
        self._checkpoints.update(zip(map(float, ts), out))
        return out

    def state(self, t: float) -> np.ndarray:
        if self.unitary:
            return dy.apply_kerr(self.rho0, self.params.g, t)
        if t in self._checkpoints:
            return self._checkpoints[t]
        t0 = max(c for c in self._checkpoints if c <= t)
        traj = dy.evolve(self._checkpoints[t0], self.params, [t0, t], self.solver.tolerances(),
                         tail_threshold=self.solver.evolve_tail)
        self.stats.append(traj.solver_stats)
        return traj.final


@dataclass
class MaxResult:
    """``max_t`` of ``N_vol`` (golden-refined) and ``N_peak`` (max over every sampled time)."""

    t_max: float
    n_vol: float
    n_peak: float
    converged: bool
    bracketed: bool
    samples: list = field(default_factory=list)


def _golden(f, ts, values, xtol, maxiter=20):
    """Refine the largest of ``values`` (sampled at ``ts``) with golden-section search."""
    i = int(np.argmax(values))
    if i == 0:
        return float(ts[0]), float(values[0]), True
    if i == len(ts) - 1:
        return float(ts[-1]), float(values[-1]), False
    if not (values[i - 1] < values[i] and values[i + 1] < values[i]):
        # a tie with a neighbour: the coarse scan is all we can say
        return float(ts[i]), float(values[i]), True
    res = minimize_scalar(lambda t: -f(t), bracket=(ts[i - 1], ts[i], ts[i + 1]), method="golden",
                          options={"xtol": xtol, "maxiter": maxiter})
    if -res.fun >= values[i]:
        return float(res.x), float(-res.fun), True
    return float(ts[i]), float(values[i]), True


def maximize_negativity(path: StatePath, to_time, search: MaxSearch, grid: GridConfig,
                        threads: int | None = None) -> MaxResult:
    """Coarse scan of ``[0, search.stop]`` then golden-section refinement of ``N_vol``.

    ``to_time`` maps the scan variable onto physical time.
    """
    ts = np.linspace(0.0, search.stop, search.coarse)
    samples = []
    grids = []
    prev = None
    for T, rho in zip(ts, path.states([to_time(T) for T in ts])):
        rep = measure(rho, grid, prev, threads)
        prev = rep.grid
        grids.append(rep.grid)
        samples.append((float(T), rep.n_vol, rep.n_peak, rep.converged))
    # the bracket ends are scan points; reuse their values so the bracket stays valid
    cache = {float(smp[0]): smp[1] for smp in samples}

    def nvol(T):
        T = float(T)
        if T not in cache:
            # start from the grid of the closest scan point; late grids are far larger
            near = grids[int(np.argmin(np.abs(ts - T)))]
            rep = measure(path.state(to_time(T)), grid, near, threads)
            cache[T] = rep.n_vol
            samples.append((T, rep.n_vol, rep.n_peak, rep.converged))
        return cache[T]

    t_max, n_max, bracketed = _golden(nvol, ts, [s[1] for s in samples], search.xtol)
    samples.sort()
    ok = bracketed and all(s[3] for s in samples)
    return MaxResult(t_max, n_max, max(s[2] for s in samples), ok, bracketed, samples)


def _asymptotic_max(p: asy.AsymptoticParams, search: MaxSearch):
    ts = np.linspace(0.0, search.stop, search.coarse)
    curve = asy.asymptotic_negativity(p, ts)

    def f(T):
        return float(asy.asymptotic_negativity(p, [T]).n_vol[0])

    t_max, n_max, bracketed = _golden(f, ts, curve.n_vol, search.xtol)
    return t_max, n_max, float(np.max(curve.sigma2_n_peak)) / p.sigma**2, bracketed


def two_stage_decay(r0: float, tau0: float, decay_times, decoherence: str, rate: float,
                    nbar: float = 0.0, solver: SolverConfig | None = None,
                    grid: GridConfig | None = None, rho0: np.ndarray | None = None,
                    threads: int | None = None) -> list[tuple]:
    """Kerr-evolve to ``tau0`` then decohere with ``H = 0``.

    ``decay_times`` are neutral units: ``gamma (2 nbar + 1) t s^2`` for damping,
    ``gamma_phi t s^4`` for dephasing. Rows are
    ``(u, tau0 + u, t, n_vol, n_peak, converged)``.
    """
    solver = solver or SolverConfig()
    grid = grid or GridConfig()
    s = math.exp(r0)
    if rho0 is None:
        rho0 = squeezed_kerr_state(r0, tau0, solver)
    else:
        rho0 = dy.apply_kerr(rho0, 1.0, tau0 / s**4)
    if decoherence == "damping":
        params = dy.ModelParams(g=0.0, gamma=rate, nbar=nbar)
        unit = rate * (2 * nbar + 1) * s**2
    elif decoherence == "dephasing":
        params = dy.ModelParams(g=0.0, gamma_phi=rate)
        unit = rate * s**4
    else:
        raise ValueError(f"unknown decoherence {decoherence!r}")
    us = np.asarray(decay_times, dtype=float)
    path = StatePath(rho0, params, solver)
    rows = []
    prev = None
    for u, rho in zip(us, path.states(us / unit)):
        rep = measure(rho, grid, prev, threads)
        prev = rep.grid
        rows.append((float(u), tau0 + float(u), float(u / unit), rep.n_vol, rep.n_peak, rep.converged))
    return rows


def coherent_grid(alpha: complex, max_spacing: float) -> wg.PhaseGrid:
    """Square grid holding the Kerr ring of radius ``|alpha|`` with spacing ``<= max_spacing``."""
    ext = abs(alpha) + 4.0
    half = math.ceil(ext / max_spacing)
    return wg.PhaseGrid(2 * half + 1, 2 * half + 1, half * max_spacing, half * max_spacing)


def additive_residual(table: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Best ``f_i + h_j`` fit to a 2-D table; returns the max residual and both parts."""
    grand = table.mean()
    f = table.mean(axis=1) - grand
    h = table.mean(axis=0) - grand
    fit = grand + f[:, None] + h[None, :]
    return float(np.max(np.abs(table - fit))), grand + f, h


def _pool_map(fn, items, workers):
    """Ordered map; a process pool when more than one worker is requested."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items)),
                             initializer=_worker_init) as ex:
        return list(ex.map(fn, items))


def _worker_init():
    import numba

    numba.set_num_threads(1)


def _times(cfg_axis, g):
    """Config times are ``g t``; returns physical times (``g = 0`` means already physical)."""
    pts = cfg_axis.points()
    return pts / g if g else pts


# -- drivers --------------------------------------------------------------------


def run_evolve(cfg, threads=None):
    params = cfg.model.params()
    spec = cfg.state.spec()
    rho0 = initial_state(spec, cfg.solver)
    gts = cfg.times.points()
    ts = _times(cfg.times, params.g)
    if cfg.method == "exact-kerr":
        if params.gamma or params.gamma_phi or params.eta or params.omega:
            raise ConfigError("method 'exact-kerr' needs a pure Kerr model (only g nonzero)")
        states = [dy.apply_kerr(rho0, params.g, t) for t in ts]
        stats = {}
    else:
        traj = dy.evolve(rho0, params, ts, cfg.solver.tolerances(),
                         tail_threshold=cfg.solver.evolve_tail)
        states, stats = traj.states, traj.solver_stats
    pure = abs(np.real(np.trace(rho0 @ rho0)) - 1) < 1e-10
    n_op = fock.number_operator(rho0.shape[0])
    cols = ["gt", "t", "fidelity_initial", "trace", "mean_n", "mean_x", "mean_y", "var_x",
            "var_y", "cov_xy"]
    if cfg.negativity:
        cols += ["n_vol", "n_peak", "converged"]
    table = Table("evolution", cols, meta={"dim": rho0.shape[0], "solver": stats})
    prev = None
    for u, t, rho in zip(gts, ts, states):
        fid = float(np.real(np.trace(rho @ rho0))) if pure else fock.fidelity(rho, rho0)
        m = fock.quadrature_moments(rho)
        row = [u, t, fid, float(np.real(np.trace(rho))), fock.expectation(n_op, rho).real,
               m["mean_x"], m["mean_y"], m["var_x"], m["var_y"], m["cov_xy"]]
        if cfg.negativity:
            rep = measure(rho, cfg.grid, prev, threads)
            prev = rep.grid
            row += [rep.n_vol, rep.n_peak, rep.converged]
        table.add(*row)
    fids = table.column("fidelity_initial")
    return [table], {"final_fidelity_to_initial": float(fids[-1]), "dim": rho0.shape[0]}


def run_negativity_vs_time(cfg, threads=None):
    params = cfg.model.params()
    spec = cfg.state.spec()
    rho0 = initial_state(spec, cfg.solver)
    axis = cfg.times.points()
    if cfg.axis == "gts4":
        if spec.r0 <= 0:
            raise ConfigError("the gts4 axis needs a squeezed initial state (r0 > 0)")
        g = params.g or 1.0
        ts = axis / (g * math.exp(4 * spec.r0))
    else:
        ts = _times(cfg.times, params.g)
    path = StatePath(rho0, params, cfg.solver)
    table = Table("negativity", [cfg.axis, "t", "n_vol", "n_peak", "converged", "grid_nx",
                                 "grid_ny", "x_ext", "y_ext"], meta={"dim": rho0.shape[0]})
    prev = None
    for a, t, rho in zip(axis, ts, path.states(ts)):
        rep = measure(rho, cfg.grid, prev, threads)
        prev = rep.grid
        g_ = rep.grid
        table.add(a, t, rep.n_vol, rep.n_peak, rep.converged, g_.n_x, g_.n_y, g_.x_ext, g_.y_ext)
    nv = table.column("n_vol")
    return [table], {"max_n_vol": float(nv.max()), "dim": rho0.shape[0]}


def _collapse_point(args):
    r0, nbar0, scaled, solver, grid, threads = args
    s, sig2 = math.exp(r0), 2 * nbar0 + 1
    rho0 = squeezed_state(r0, nbar0, solver)
    rows = []
    prev = None
    for u in scaled:
        rho = dy.apply_kerr(rho0, 1.0, u * sig2 / s**4)
        rep = measure(rho, grid, prev, threads)
        prev = rep.grid
        rows.append((r0, nbar0, math.sqrt(sig2), u, u * sig2, rep.n_vol, rep.n_peak,
                     sig2 * rep.n_peak, rep.converged))
    return rows


def _relative_spread(values: np.ndarray) -> np.ndarray:
    """Per-column ``(max - min) / max`` across rows."""
    top = np.max(values, axis=0)
    return np.where(top > 0, (np.max(values, axis=0) - np.min(values, axis=0)) / np.where(top > 0, top, 1), 0.0)


def run_scaled_collapse(cfg, threads=None):
    scaled = cfg.scaled_times.points()
    cols = ["r0", "nbar0", "sigma", "gts4_over_sigma2", "gts4", "n_vol", "n_peak",
            "sigma2_n_peak", "converged"]
    full = Table("collapse", cols)
    jobs = [(r0, nb, scaled, cfg.solver, cfg.grid, None if threads and threads > 1 else threads)
            for r0 in cfg.r0 for nb in cfg.nbar0]
    for rows in _pool_map(_collapse_point, jobs, threads):
        for r in rows:
            full.add(*r)
    tables = [full]
    nv = full.column("n_vol").reshape(len(jobs), len(scaled))
    pk = full.column("sigma2_n_peak").reshape(len(jobs), len(scaled))
    summary = {"max_rel_spread_n_vol": float(np.max(_relative_spread(nv))),
               "max_rel_spread_sigma2_n_peak": float(np.max(_relative_spread(pk))),
               "all_converged": bool(all(full.column("converged")))}
    if cfg.asymptotic:
        tab = Table("asymptotic", ["r0", "nbar0", "gts4_over_sigma2", "n_vol", "sigma2_n_peak",
                                   "valid"])
        worst = 0.0
        for j, (r0, nb) in enumerate((r0, nb) for r0 in cfg.r0 for nb in cfg.nbar0):
            p = asy.AsymptoticParams(s=math.exp(r0), sigma=math.sqrt(2 * nb + 1))
            curve = asy.asymptotic_negativity(p, scaled * p.sigma**2)
            for i, u in enumerate(scaled):
                tab.add(r0, nb, u, curve.n_vol[i], curve.sigma2_n_peak[i], p.valid)
            ok = curve.n_vol > 0
            if np.any(ok):
                worst = max(worst, float(np.max(np.abs(nv[j][ok] - curve.n_vol[ok]) / curve.n_vol[ok])))
        tables.append(tab)
        summary["max_rel_dev_asymptotic_n_vol"] = worst
    return tables, summary


def run_kerr_decay(cfg, threads=None):
    dec = cfg.decoherence
    rate = dec.gamma if dec.kind == "damping" else dec.gamma_phi
    growth = Table("growth", ["r0", "gts4", "n_vol", "n_peak", "converged"])
    decay = Table("decay", ["r0", "tau0", "elapsed", "neutral_time", "t", "n_vol", "n_peak",
                            "converged"])
    summary = {}
    for r0 in cfg.r0:
        base = (initial_state(cfg.state.spec(), cfg.solver) if cfg.state is not None
                else squeezed_state(r0, 0.0, cfg.solver))
        s = math.exp(r0)
        prev = None
        for u in cfg.growth_times.points():
            rep = measure(dy.apply_kerr(base, 1.0, u / s**4), cfg.grid, prev, threads)
            prev = rep.grid
            growth.add(r0, u, rep.n_vol, rep.n_peak, rep.converged)
        for tau0 in cfg.tau0:
            rows = two_stage_decay(r0, tau0, cfg.decay_times.points(), dec.kind, rate, dec.nbar,
                                   cfg.solver, cfg.grid, rho0=base, threads=threads)
            for r in rows:
                decay.add(r0, tau0, *r)
        if dec.kind == "damping":
            u_dec = rate * (2 * dec.nbar + 1) * s**2 * gs.t_decay(rate, dec.nbar)
            summary[f"decay_bound_neutral_r0={r0:g}"] = u_dec
    return [growth, decay], summary


def _damping_cell(args):
    r0, kappa, phi, nbar, search, solver, grid, threads = args
    s = math.exp(r0)
    gamma = kappa * s**2 / (2 * nbar + 1)
    params = dy.ModelParams(g=1.0, gamma=gamma, nbar=nbar, gamma_phi=phi)
    path = StatePath(squeezed_state(r0, 0.0, solver), params, solver)
    res = maximize_negativity(path, lambda T: T / s**4, search.for_rate(kappa), grid, threads)
    return gamma, res


def _asymptotic_cell(args):
    r0, kappa, phi, search = args
    s = math.exp(r0)
    p = asy.AsymptoticParams(s=s, gamma_eff=kappa * s**2, gamma_phi=phi)
    return _asymptotic_max(p, search.for_rate(kappa))


def run_max_negvol_vs_damping(cfg, threads=None):
    inner = None if threads and threads > 1 else threads
    cells = [(r0, k) for r0 in cfg.r0 for k in cfg.rates]
    results = _pool_map(_damping_cell, [(r0, k, 0.0, cfg.nbar, cfg.search, cfg.solver, cfg.grid,
                                         inner) for r0, k in cells], threads)
    table = Table("max_negativity", ["r0", "rate", "gamma", "nbar", "max_n_vol", "argmax_gts4",
                                     "max_n_peak", "converged", "bracketed"])
    for (r0, k), (gamma, res) in zip(cells, results):
        table.add(r0, k, gamma, cfg.nbar, res.n_vol, res.t_max, res.n_peak, res.converged,
                  res.bracketed)
    samples = Table("samples", ["r0", "rate", "gts4", "n_vol", "n_peak", "converged"])
    for (r0, k), (_, res) in zip(cells, results):
        for smp in res.samples:
            samples.add(r0, k, *smp)
    tables = [table, samples]
    summary = {}
    if cfg.asymptotic:
        asym = Table("asymptotic", ["rate", "max_n_vol", "argmax_gts4", "max_n_peak_r0_ref",
                                    "bracketed"])
        ref = max(cfg.r0)
        for k, out in zip(cfg.rates, _pool_map(_asymptotic_cell,
                                                [(ref, k, 0.0, cfg.search) for k in cfg.rates],
                                                threads)):
            t_max, n_max, n_peak, br = out
            asym.add(k, n_max, t_max, n_peak, br)
        tables.append(asym)
    mv = table.column("max_n_vol").reshape(len(cfg.r0), len(cfg.rates))
    summary["max_rel_spread_over_r0"] = [float(v) for v in _relative_spread(mv)]
    return tables, summary


def run_contour(cfg, threads=None):
    inner = None if threads and threads > 1 else threads
    cells = [(r0, k, p) for r0 in cfg.r0 for k in cfg.damping_rates for p in cfg.dephasing_rates]
    results = _pool_map(_damping_cell, [(r0, k, p, cfg.nbar, cfg.search, cfg.solver, cfg.grid,
                                         inner) for r0, k, p in cells], threads)
    table = Table("contour", ["r0", "damping_rate", "dephasing_rate", "max_n_vol", "argmax_gts4",
                              "max_n_peak", "converged"])
    for (r0, k, p), (_, res) in zip(cells, results):
        table.add(r0, k, p, res.n_vol, res.t_max, res.n_peak, res.converged)
    tables = [table]
    nd, np_ = len(cfg.damping_rates), len(cfg.dephasing_rates)
    grid_v = table.column("max_n_vol").reshape(len(cfg.r0), nd, np_)
    grid_p = table.column("max_n_peak").reshape(len(cfg.r0), nd, np_)
    checks = Table("checks", ["r0", "monotone_n_vol", "monotone_n_peak", "additive_residual",
                              "axis_residual", "non_additive"])
    for i, r0 in enumerate(cfg.r0):
        mono_v = bool(np.all(np.diff(grid_v[i], axis=0) <= 0) and np.all(np.diff(grid_v[i], axis=1) <= 0))
        mono_p = bool(np.all(np.diff(grid_p[i], axis=0) <= 0) and np.all(np.diff(grid_p[i], axis=1) <= 0))
        resid = axis_res = float("nan")
        non_add = False
        if nd >= 2 and np_ >= 2:
            resid = additive_residual(grid_v[i])[0]
            axis_res = axis_residual(grid_v[i], cfg.damping_rates, cfg.dephasing_rates)
            non_add = resid > 3 * axis_res
        checks.add(r0, mono_v, mono_p, resid, axis_res, non_add)
    tables.append(checks)
    if cfg.asymptotic:
        ref = max(cfg.r0)
        asym = Table("asymptotic", ["damping_rate", "dephasing_rate", "max_n_vol", "argmax_gts4"])
        pairs = [(k, p) for k in cfg.damping_rates for p in cfg.dephasing_rates]
        for (k, p), out in zip(pairs, _pool_map(_asymptotic_cell,
                                                [(ref, k, p, cfg.search) for k, p in pairs], threads)):
            asym.add(k, p, out[1], out[0])
        tables.append(asym)
    return tables, {"all_converged": bool(all(table.column("converged")))}


def axis_residual(table: np.ndarray, rows, cols) -> float:
    """Worst residual of low-order polynomial fits along each axis separately."""
    def worst(values, x):
        deg = min(2, len(x) - 2)
        if deg < 0:
            return 0.0
        return max(float(np.max(np.abs(np.polyval(np.polyfit(x, v, deg), x) - v))) for v in values)

    return max(worst(table.T, np.asarray(rows, float)), worst(table, np.asarray(cols, float)))


def _plateau_point(args):
    alpha, stop, coarse, xtol, spacing, solver, grid, threads = args
    rho0 = initial_state(fock.StateSpec("coherent", alpha0=alpha), solver)
    start = coherent_grid(alpha, spacing)
    gcfg = grid.model_copy(update={"mode": "adaptive", "n_x": start.n_x, "n_y": start.n_y,
                                   "x_ext": start.x_ext, "y_ext": start.y_ext})
    path = StatePath(rho0, dy.ModelParams(g=1.0), solver)
    return maximize_negativity(path, lambda t: t, MaxSearch(stop=stop, coarse=coarse, xtol=xtol),
                               gcfg, threads)


def run_coherent_plateau(cfg, threads=None):
    inner = None if threads and threads > 1 else threads
    results = _pool_map(_plateau_point, [(a, cfg.stop, cfg.coarse, cfg.xtol, cfg.max_spacing,
                                          cfg.solver, cfg.grid, inner) for a in cfg.alpha0], threads)
    table = Table("plateau", ["alpha0", "max_n_vol", "argmax_gt", "max_n_peak", "converged"])
    for a, res in zip(cfg.alpha0, results):
        table.add(a, res.n_vol, res.t_max, res.n_peak, res.converged)
    x = np.asarray(cfg.alpha0)
    y = table.column("max_n_vol").astype(float)
    slope, intercept = (np.polyfit(x, y, 1) if len(x) >= 2 else (float("nan"), float("nan")))
    fit = Table("fit", ["slope", "intercept", "max_abs_residual"])
    fit.add(float(slope), float(intercept), float(np.max(np.abs(y - (slope * x + intercept)))))
    tables = [table, fit]
    us = (cfg.collapse_times.points() if cfg.collapse_times is not None
          else np.linspace(0.05, 1.0, 20))
    col = Table("short_time", ["alpha0", "gt_alpha0_1.5", "gt", "n_vol", "n_peak",
                               "n_vol_over_sqrt_alpha0", "converged"])
    slopes = Table("short_time_slope", ["alpha0", "slope_n_vol_vs_gt", "slope_over_alpha0_sq"])
    for a in cfg.collapse_alpha0:
        rho0 = initial_state(fock.StateSpec("coherent", alpha0=a), cfg.solver)
        start = coherent_grid(a, cfg.max_spacing)
        gcfg = cfg.grid.model_copy(update={"n_x": start.n_x, "n_y": start.n_y,
                                           "x_ext": start.x_ext, "y_ext": start.y_ext})
        ts, nvs = [], []
        prev = None
        for u in us:
            t = u / a**1.5
            rep = measure(dy.apply_kerr(rho0, 1.0, t), gcfg, prev, threads)
            prev = rep.grid
            col.add(a, u, t, rep.n_vol, rep.n_peak, rep.n_vol / math.sqrt(a), rep.converged)
            ts.append(t)
            nvs.append(rep.n_vol)
        # linear-growth region: the upper half of the short-time window
        half = len(ts) // 2
        sl = float(np.polyfit(ts[half:], nvs[half:], 1)[0]) if len(ts) - half >= 2 else float("nan")
        slopes.add(a, sl, sl / a**2)
    tables += [col, slopes]
    return tables, {"slope": float(slope), "intercept": float(intercept)}


def run_asymptotic_compare(cfg, threads=None):
    params = cfg.model.params()
    if params.g != 1.0:
        raise ConfigError("asymptotic-compare uses g = 1 (scaled time g t s^4)")
    s = math.exp(cfg.r0)
    p = asy.AsymptoticParams.from_physical(cfg.r0, cfg.nbar0, 1.0, params.gamma, params.nbar,
                                           params.gamma_phi)
    scaled = cfg.scaled_times.points()
    path = StatePath(squeezed_state(cfg.r0, cfg.nbar0, cfg.solver), params, cfg.solver)
    curve = asy.asymptotic_negativity(p, scaled)
    table = Table("compare", ["gts4", "n_vol", "n_peak", "converged", "asym_n_vol",
                              "asym_n_peak", "rel_dev_n_vol"])
    prev = None
    worst = 0.0
    for i, (u, rho) in enumerate(zip(scaled, path.states(scaled / s**4))):
        rep = measure(rho, cfg.grid, prev, threads)
        prev = rep.grid
        a_nv = float(curve.n_vol[i])
        dev = abs(rep.n_vol - a_nv) / a_nv if a_nv > 0 else float("nan")
        if a_nv > 0:
            worst = max(worst, dev)
        table.add(u, rep.n_vol, rep.n_peak, rep.converged, a_nv, float(curve.n_peak[i]), dev)
    return [table], {"max_rel_dev_n_vol": worst, "validity_ratio": p.validity_ratio}


def run_table_gen(cfg, threads=None):
    if cfg.table == "squeezing-table":
        rows = gs.squeezing_table(*([cfg.r0] if cfg.r0 else []))
        table = Table("squeezing_table", ["r0", "s"])
    else:
        kw = {"gamma": cfg.gamma, "nbar": cfg.nbar}
        if cfg.r0:
            kw["r0s"] = cfg.r0
        rows = gs.decay_table(**kw)
        table = Table("decay_table", ["r0", "scaled_t_decay"])
    for r in rows:
        table.add(float(r[0]), round(float(r[1]), 2))
    return [table], {"rows": len(rows)}


DRIVERS = {
    "evolve": run_evolve,
    "negativity-vs-time": run_negativity_vs_time,
    "scaled-collapse": run_scaled_collapse,
    "kerr-decay": run_kerr_decay,
    "max-negvol-vs-damping": run_max_negvol_vs_damping,
    "max-negativity-contour": run_contour,
    "coherent-plateau": run_coherent_plateau,
    "asymptotic-compare": run_asymptotic_compare,
    "table-gen": run_table_gen,
}


def cpu_count() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
