"""The fifteen acceptance criteria at their stated tolerances.

Each test prints (and records for the terminal summary) one PASS/FAIL line.
Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE
from kerrneg import dynamics as dy
from kerrneg import fock
from kerrneg import gaussian as gs
from kerrneg import wigner as wg
from kerrneg.errors import TruncationError
from kerrneg.harness import experiments as ex
from kerrneg.harness.config import GridConfig, SolverConfig, parse_config

pytestmark = pytest.mark.acceptance


def record(n: int, title: str, ok: bool, detail: str):
    line = f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_exact_point_values():
    w0 = wg.wigner_point(fock.vacuum(4), 0j)
    w1 = wg.wigner_point(fock.number_state(4, 1), 0j)
    e0, e1 = abs(w0 - 2 / math.pi), abs(w1 + 2 / math.pi)
    # the grid kernel must agree at the origin too
    g = wg.PhaseGrid.square(1.0, 5)
    e2 = abs(wg.wigner_grid(fock.number_state(4, 1), g, check=False).values[2, 2] + 2 / math.pi)
    err = max(e0, e1, e2)
    record(1, "exact point values", err <= 1e-10,
           f"|W_0(0) - 2/pi| = {e0:.1e}, |W_1(0) + 2/pi| = {e1:.1e}, grid {e2:.1e}")


def test_02_gaussian_oracle():
    worst_w, worst_neg = 0.0, 0.0
    for nbar0 in (0.0, 1.0):
        for r0 in (0.0, 1.0, 1.5):
            spec = gs.GaussianSpec(nbar0=nbar0, r0=r0)
            kind = "squeezed_thermal" if nbar0 else "squeezed_vacuum"
            _, rho = fock.auto_dim(fock.StateSpec(kind, r0=r0, nbar0=nbar0), threshold=1e-16)
            grid = wg.fitted_grid(rho, 121, 121)
            field = wg.wigner_grid(rho, grid)
            xx, yy = grid.mesh()
            worst_w = max(worst_w, float(np.max(np.abs(field.values - gs.gaussian_wigner(spec, xx, yy)))))
            rep = wg.negativity(field)
            worst_neg = max(worst_neg, rep.n_vol, rep.n_peak)
    ok = worst_w <= 1e-7 and worst_neg <= 1e-6
    record(2, "Gaussian oracle", ok,
           f"max |W_fock - W_gauss| = {worst_w:.2e} (<= 1e-7), max(N_vol, N_peak) = {worst_neg:.1e} (<= 1e-6)")


def test_03_kerr_periodicity():
    rho0 = fock.coherent_state(40, 2.0)
    exact = np.linalg.norm(dy.apply_kerr(rho0, 1.0, math.pi) - rho0)
    traj = dy.evolve(rho0, dy.ModelParams(g=1.0), [0.0, math.pi], dy.Tolerances(1e-10, 1e-12))
    ode = np.linalg.norm(traj.final - rho0)
    _, sq = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=1.0))
    tr = dy.evolve(sq, dy.ModelParams(g=1.0), [0.0, math.pi / 4], dy.Tolerances(1e-10, 1e-12))
    target = fock.rotate(len(sq), -math.pi / 4) @ fock.squeezed_vacuum_vector(len(sq), 1.0)
    fid = fock.fidelity(tr.final, target)
    ok = exact <= 1e-12 and ode <= 1e-5 and fid >= 1 - 1e-6
    record(3, "Kerr periodicity", ok,
           f"exact {exact:.1e} (<= 1e-12), ODE {ode:.1e} (<= 1e-5), "
           f"pi/4g rotation 1 - F = {1 - fid:.1e} (<= 1e-6)")


def test_04_cat_states():
    alpha = 3.0
    n, _ = fock.auto_dim(fock.StateSpec("coherent", alpha0=alpha), threshold=1e-16)
    psi = dy.apply_kerr(fock.coherent_vector(n, alpha), 1.0, math.pi / 2)
    ph = np.exp(1j * math.pi / 4)
    cat = (fock.coherent_vector(n, 1j * alpha) / ph + fock.coherent_vector(n, -1j * alpha) * ph) / math.sqrt(2)
    literal = (fock.coherent_vector(n, -1j * alpha) / ph + fock.coherent_vector(n, 1j * alpha) * ph) / math.sqrt(2)
    f_cat = abs(np.vdot(cat, psi)) ** 2
    f_lit = abs(np.vdot(literal, psi)) ** 2
    sq = fock.squeezed_vacuum_vector(200, 1.0)
    psi8 = dy.apply_kerr(sq, 1.0, math.pi / 8)
    r = lambda phi: np.exp(1j * phi * np.arange(200))  # noqa: E731
    sup = (r(math.pi / 8) * sq / ph + r(-3 * math.pi / 8) * sq * ph) / math.sqrt(2)
    f_sq = abs(np.vdot(sup, psi8)) ** 2
    ok = f_cat >= 1 - 1e-8 and f_sq >= 1 - 1e-8
    record(4, "cat-state generation", ok,
           f"1 - F(cat) = {1 - f_cat:.1e}, 1 - F(pi/8g squeezed) = {1 - f_sq:.1e} (<= 1e-8); "
           f"superposition with +-i alpha swapped has F = {f_lit:.1e}")


def _damped_cov_error(rho0, nbar, gts):
    spec = gs.GaussianSpec(r0=1.5)
    worst = 0.0
    reached = [0.0]

    def cb(t, rho):
        nonlocal worst
        m = fock.quadrature_moments(rho)
        ref = gs.damp_gaussian(spec, 1.0, nbar, t).cov
        scale = math.sqrt(ref[0, 0] * ref[1, 1])
        worst = max(worst, rel(m["var_x"], ref[0, 0]), rel(m["var_y"], ref[1, 1]),
                    abs(m["cov_xy"] - ref[0, 1]) / scale)
        reached[0] = t

    err = None
    try:
        dy.evolve(rho0, dy.ModelParams(g=0.0, gamma=1.0, nbar=nbar), gts, store_states=False,
                  callback=cb)
    except TruncationError as exc:
        err = exc
    return worst, reached[0], err


def test_05_damping_moments():
    gts = np.linspace(0, 3, 31)
    _, rho = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=1.5))
    e0, t0, err0 = _damped_cov_error(rho, 0.0, gts)
    # nbar = 1000 heats the mode to <n> ~ 1000 gamma t; N = 2000 is the basis cap
    rho_big = fock.squeezed_vacuum(2000, 1.5)
    e1, t1, err1 = _damped_cov_error(rho_big, 1000.0, gts)
    ok = err0 is None and e0 <= 1e-3 and err1 is None and e1 <= 1e-3
    tail = (f"rel err {e1:.1e} up to gamma t = {t1:.3g}, then TruncationError (N = 2000 cap)"
            if err1 else f"rel err {e1:.1e}")
    record(5, "damping moments", ok,
           f"nbar=0: rel err {e0:.1e} over gamma t in [0, {t0:g}]; nbar=1000: {tail}")


def test_06_decay_bound():
    r0, tau0, nbar, gamma = 1.0, 0.3, 1000.0, 1.0
    s = math.exp(r0)
    u_dec = gamma * (2 * nbar + 1) * s**2 * gs.t_decay(gamma, nbar)
    early = list(np.linspace(0.04, 0.2, 5) * u_dec)
    rows = ex.two_stage_decay(r0, tau0, [0.0] + early + [u_dec], "damping", gamma, nbar)
    nv = [r[3] for r in rows]
    at_decay = nv[-1]
    early_min = min(nv[1:-1])
    ok = at_decay <= 1e-4 and early_min > 1e-6 and all(r[5] for r in rows)
    record(6, "decay bound", ok,
           f"N_vol(t_decay) = {at_decay:.1e} (<= 1e-4); min N_vol on (0, 0.2 t_decay] = "
           f"{early_min:.2e} (> 1e-6, negativity survives); N_vol(0) = {nv[0]:.3e}")


def test_07_dephasing_closed_form():
    _, rho0 = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=1.0))
    worst = 0.0
    times = np.linspace(0, 2, 9)
    for g in (1.0, 0.37):
        traj = dy.evolve(rho0, dy.ModelParams(g=g, gamma_phi=1.0), times)
        for t, rho in zip(times, traj.states):
            worst = max(worst, float(np.max(np.abs(rho - dy.dephasing_closed_form(rho0, g, 1.0, t)))))
    record(7, "dephasing closed form", worst <= 1e-6,
           f"max element-wise |evolve - closed form| = {worst:.1e} (<= 1e-6), gamma_phi t <= 2, g in {{1, 0.37}}")


def test_08_superoperator_algebra():
    rng = np.random.default_rng(8)
    w1 = w2 = w3 = 0.0
    for _ in range(20):
        z = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        rho = z @ z.conj().T
        rho /= np.trace(rho).real
        res = dy.superop_commutators(rho, g=1.0, gamma=0.7, nbar=0.3, gamma_phi=1.3)
        w1 = max(w1, res["residual_g_phi"])
        w2 = max(w2, res["residual_phi_gamma"])
        w3 = max(w3, res["residual_g_gamma"])
    ok = w1 <= 1e-12 and w2 <= 1e-12 and w3 <= 1e-10
    record(8, "superoperator algebra", ok,
           f"[L_g, L_phi] {w1:.1e}, [L_phi, L_gamma] {w2:.1e} (<= 1e-12), "
           f"[L_g, L_gamma] vs closed form {w3:.1e} (<= 1e-10)")


def _collapse(r0, nbar0, times):
    cfg = parse_config({"kind": "scaled-collapse", "r0": r0, "nbar0": nbar0,
                        "scaled_times": {"values": times}})
    tables, summary = ex.run_scaled_collapse(cfg)
    return tables, summary


SCALED = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]


def test_09_unitary_scaling_collapse():
    tables, _ = _collapse([1.5, 2.0], [0.0], SCALED)
    full, asym = tables
    nv = full.column("n_vol").reshape(2, -1)
    pk = full.column("n_peak").reshape(2, -1)
    conv = all(full.column("converged"))
    d_vol = float(np.max(np.abs(nv[0] - nv[1]) / nv[1]))
    d_pk = float(np.max(np.abs(pk[0] - pk[1]) / pk[1]))
    a_nv = asym.column("n_vol").reshape(2, -1)[1]
    a_pk = asym.column("sigma2_n_peak").reshape(2, -1)[1]
    a_vol = float(np.max(np.abs(a_nv - nv[1]) / nv[1]))
    a_peak = float(np.max(np.abs(a_pk - pk[1]) / pk[1]))
    ok = conv and d_vol <= 0.10 and d_pk <= 0.10 and a_vol <= 0.15 and a_peak <= 0.15
    record(9, "unitary scaling collapse", ok,
           f"r0 1.5 vs 2: N_vol {d_vol:.1%}, N_peak {d_pk:.1%} (<= 10%); asymptotic vs r0=2: "
           f"N_vol {a_vol:.1%}, N_peak {a_peak:.1%} (<= 15%); gts^4 in {SCALED[0]}..{SCALED[-1]}, "
           f"converged={conv}")


def test_10_thermal_scaling():
    tables, _ = _collapse([1.0], [0.0, 1.0], SCALED)
    full = tables[0]
    nv = full.column("n_vol").reshape(2, -1)
    pk = full.column("sigma2_n_peak").reshape(2, -1)
    conv = all(full.column("converged"))
    d_vol = float(np.max(np.abs(nv[1] - nv[0]) / nv[0]))
    d_pk = float(np.max(np.abs(pk[1] - pk[0]) / pk[0]))
    ok = conv and d_vol <= 0.05 and d_pk <= 0.05
    worst_t = SCALED[int(np.argmax(np.abs(nv[1] - nv[0]) / nv[0]))]
    record(10, "thermal scaling", ok,
           f"nbar0 0 vs 1 at r0=1: N_vol {d_vol:.1%} (worst at gts^4/sigma^2 = {worst_t}), "
           f"sigma^2 N_peak {d_pk:.1%} (<= 5%); converged={conv}")


RATES = [0.25, 1.0]


def test_11_damped_kerr_asymptote():
    cfg = parse_config({"kind": "max-negvol-vs-damping", "r0": [1.75, 2.0], "rates": RATES,
                        "nbar": 1000.0, "search": {"stop": 3.0, "coarse": 9, "xtol": 1e-2, "per_rate": True}})
    tables, summary = ex.run_max_negvol_vs_damping(cfg)
    table, _, asym = tables
    mv = table.column("max_n_vol").reshape(2, -1)
    conv = all(table.column("converged"))
    spread = float(np.max(np.abs(mv[0] - mv[1]) / mv[1]))
    a = asym.column("max_n_vol")
    a_dev = float(np.max(np.abs(a - mv[1]) / mv[1]))
    ok = conv and spread <= 0.10 and a_dev <= 0.15
    vals = ", ".join(f"rate {k}: {mv[0][i]:.4f} / {mv[1][i]:.4f} / {a[i]:.4f}" for i, k in enumerate(RATES))
    record(11, "damped-Kerr asymptote", ok,
           f"max_t N_vol r0=1.75 / r0=2 / asymptotic: {vals}; r0 spread {spread:.1%} (<= 10%), "
           f"asymptotic {a_dev:.1%} (<= 15%); converged={conv}")


def test_12_coherent_plateau():
    cfg = parse_config({"kind": "coherent-plateau", "alpha0": [2.0, 2.5, 3.0, 3.5, 4.0],
                        "collapse_alpha0": [], "coarse": 61})
    _, summary = ex.run_coherent_plateau(cfg)
    sl, ic = summary["slope"], summary["intercept"]
    ok = abs(sl - 0.41) <= 0.05 and abs(ic + 0.16) <= 0.08
    record(12, "coherent plateau fit", ok,
           f"slope {sl:.3f} (0.41 +- 0.05), intercept {ic:.3f} (-0.16 +- 0.08)")


def test_13_number_state_trend():
    vals, conv = [], True
    for n in range(16):
        rho = fock.number_state(max(40, n + 10), n)
        rep = wg.adaptive_negativity(rho, wg.default_grid(rho, 201), rel_tol=1e-3, abs_tol=1e-9,
                                     max_refine=3)
        vals.append(rep.n_vol)
        conv &= rep.converged
    vals = np.asarray(vals)
    increasing = bool(np.all(np.diff(vals) > 0))
    ratios = vals[5:] / (0.5 * np.sqrt(np.arange(5, 16)))
    within = bool(np.all(np.abs(ratios - 1) <= 0.2))
    ok = conv and increasing and within
    record(13, "number-state negativity trend", ok,
           f"strictly increasing={increasing}; N_vol / (sqrt(n)/2) for n=5..15 in "
           f"[{ratios.min():.3f}, {ratios.max():.3f}] (needs [0.8, 1.2]); "
           f"N_vol(1,4,9) = {vals[1]:.4f}, {vals[4]:.4f}, {vals[9]:.4f}; converged={conv}")


TABLE2 = {0.5: 1.65, 0.75: 2.12, 1.0: 2.72, 1.25: 3.49, 1.5: 4.48, 1.75: 5.75, 2.0: 7.39,
          2.25: 9.49, 2.5: 12.18}
TABLE3 = {0.5: 2.72, 0.75: 4.48, 1.0: 7.39, 1.25: 12.18, 1.5: 20.09, 1.75: 33.12, 2.0: 54.60}


def test_14_tables():
    t2 = {r: round(s, 2) for r, s in gs.squeezing_table()}
    t3 = {r: round(v, 2) for r, v in gs.decay_table()}
    bad2 = [r for r in TABLE2 if t2.get(r) != TABLE2[r]]
    bad3 = [r for r in TABLE3 if t3.get(r) != TABLE3[r]]
    record(14, "tables", not bad2 and not bad3,
           f"squeezing table {len(TABLE2) - len(bad2)}/{len(TABLE2)}, decay table "
           f"{len(TABLE3) - len(bad3)}/{len(TABLE3)} rows match to 2 decimals")


def test_15_parametric_squeezing():
    eta = 0.25
    # basis large enough for the final S(1) state
    n, _ = fock.auto_dim(fock.StateSpec("squeezed_vacuum", r0=1.0), threshold=1e-16)
    rho0 = fock.vacuum(n)
    times = np.array([1.0, 2.0, 3.0, 4.0]) / (2 * eta) / 4
    traj = dy.evolve(rho0, dy.ModelParams(g=0.0, eta=eta), np.concatenate([[0.0], times]),
                     dy.Tolerances(1e-10, 1e-12))
    worst = 0.0
    grid = wg.PhaseGrid.square(7.5, 241)
    xx, yy = grid.mesh()
    for t, rho in zip(times, traj.states[1:]):
        w = wg.wigner_grid(rho, grid).values
        ref = gs.gaussian_wigner(gs.GaussianSpec(r0=2 * eta * t), xx, yy)
        worst = max(worst, float(np.max(np.abs(w - ref))))
    record(15, "parametric squeezing", worst <= 1e-6,
           f"max |W(evolve) - W(S(2 eta t))| = {worst:.1e} (<= 1e-6) at 2 eta t in {{0.25, .., 1}}, N = {n}")
