"""Compiled kernels for Wigner-function evaluation.

For a density matrix ``rho`` the Wigner function at ``alpha = r e^{i phi}`` is

    W = sum_k w_k Re[C_k(r) e^{i k phi}],  C_k = sum_m rho[m, m+k] g_{m,k}(r)

with ``w_0 = 1``, ``w_k = 2`` and

    g_{m,k} = (2/pi) (-1)^m sqrt(m!/(m+k)!) (2r)^k e^{-2 r^2} L_m^k(4 r^2),

so that ``W_{|m><m+k|}(alpha) = g_{m,k} e^{i k phi}``.

``g`` is built from ``h_m = (-1)^m sqrt(m! k!/(m+k)!) L_m^k`` with the
three-term recurrence

    h_{m+1} = -[(2m+1+k-x) h_m + sqrt(m(m+k)) h_{m-1}] / sqrt((m+1)(m+k+1))

and a separately tracked log prefactor, so nothing overflows for N in the
hundreds.
"""

import math

import numpy as np
from numba import njit, prange

_BIG = 1e150
_LOG_BIG = math.log(_BIG)
_LOG_2_PI = math.log(2.0 / math.pi)


@njit(cache=True)
def _line_sum(diag, k, r, lgk):
    """``sum_m diag[m] g_{m,k}(r)`` for one offset ``k`` (``lgk = lgamma(k+1)``)."""
    nk = diag.shape[0]
    if nk == 0:
        return 0j
    if r == 0.0:
        if k > 0:
            return 0j
        # L_m^0(0) = 1, so g_{m,0}(0) = (2/pi)(-1)^m
        acc = 0j
        sgn = 1.0
        for m in range(nk):
            acc += sgn * diag[m]
            sgn = -sgn
        return acc * (2.0 / math.pi)
    x = 4.0 * r * r
    logpre = _LOG_2_PI + k * math.log(2.0 * r) - 2.0 * r * r - 0.5 * lgk
    scale = 0.0
    fac = math.exp(logpre)
    h_prev = 0.0
    h = 1.0
    acc = diag[0] * (h * fac)
    for m in range(nk - 1):
        h_next = -((2 * m + 1 + k - x) * h + math.sqrt(m * (m + k)) * h_prev) / math.sqrt(
            (m + 1.0) * (m + k + 1.0)
        )
        h_prev = h
        h = h_next
        if abs(h) > _BIG:
            h /= _BIG
            h_prev /= _BIG
            scale += _LOG_BIG
            fac = math.exp(logpre + scale)
        acc += diag[m + 1] * (h * fac)
    return acc


@njit(cache=True)
def transition_value(m, n, r, phi):
    """``W_{|m><n|}(r e^{i phi})`` for ``n >= m``."""
    k = n - m
    diag = np.zeros(m + 1, dtype=np.complex128)
    diag[m] = 1.0
    c = _line_sum(diag, k, r, math.lgamma(k + 1.0))
    return c * complex(math.cos(k * phi), math.sin(k * phi))


@njit(cache=True)
def point_components(diags, offsets, starts, lgk, r):
    """Per-offset sums ``C_k`` (upper triangle) for a single radius."""
    nk = offsets.shape[0]
    out = np.zeros(nk, dtype=np.complex128)
    for i in range(nk):
        out[i] = _line_sum(diags[starts[i]:starts[i + 1]], offsets[i], r, lgk[i])
    return out


@njit(cache=True)
def recurrence_tables(offsets, starts):
    """``sqrt(m(m+k))`` and ``1/sqrt((m+1)(m+k+1))`` laid out like the packed diagonals."""
    size = starts[-1]
    a = np.zeros(size)
    b = np.zeros(size)
    for i in range(offsets.shape[0]):
        k = offsets[i]
        for m in range(starts[i + 1] - starts[i]):
            a[starts[i] + m] = math.sqrt(m * (m + k))
            b[starts[i] + m] = 1.0 / math.sqrt((m + 1.0) * (m + k + 1.0))
    return a, b


_LANES = 8


@njit(parallel=True, cache=True, fastmath=True)
def grid_quarter(diags, offsets, starts, lgk, tab_a, tab_b, xs, ys, ix0, iy0, out):
    """Fill ``out[ix, iy]`` for all nodes using the four-fold mirror symmetry.

    ``xs``/``ys`` are symmetric node arrays; ``ix0``/``iy0`` index the first
    non-negative coordinate. Node ``i`` mirrors to ``len - 1 - i``. Points
    are processed in small batches so the serial recurrence of one radius
    overlaps with the others.
    """
    nx = xs.shape[0]
    ny = ys.shape[0]
    nqx = nx - ix0
    nqy = ny - iy0
    nk = offsets.shape[0]
    total = nqx * nqy
    nchunks = (total + _LANES - 1) // _LANES
    for c in prange(nchunks):
        p0 = c * _LANES
        lanes = min(_LANES, total - p0)
        rr = np.zeros(_LANES)
        xq = np.zeros(_LANES)
        phis = np.zeros(_LANES)
        for j in range(lanes):
            t = p0 + j
            x = xs[ix0 + t // nqy]
            y = ys[iy0 + t % nqy]
            rr[j] = math.sqrt(x * x + y * y)
            xq[j] = 4.0 * rr[j] * rr[j]
            phis[j] = math.atan2(y, x)
        w_pp = np.zeros(_LANES)
        w_pm = np.zeros(_LANES)
        w_mp = np.zeros(_LANES)
        w_mm = np.zeros(_LANES)
        h = np.zeros(_LANES)
        hp = np.zeros(_LANES)
        fac = np.zeros(_LANES)
        logpre = np.zeros(_LANES)
        scale = np.zeros(_LANES)
        acc_r = np.zeros(_LANES)
        acc_i = np.zeros(_LANES)
        for i in range(nk):
            k = offsets[i]
            s0 = starts[i]
            length = starts[i + 1] - s0
            for j in range(lanes):
                r = rr[j]
                acc_r[j] = 0.0
                acc_i[j] = 0.0
                hp[j] = 0.0
                h[j] = 1.0
                scale[j] = 0.0
                if r == 0.0:
                    fac[j] = 2.0 / math.pi if k == 0 else 0.0
                    logpre[j] = 0.0
                else:
                    logpre[j] = _LOG_2_PI + k * math.log(2.0 * r) - 2.0 * r * r - 0.5 * lgk[i]
                    fac[j] = math.exp(logpre[j])
                d = diags[s0]
                acc_r[j] = d.real * fac[j]
                acc_i[j] = d.imag * fac[j]
            for m in range(length - 1):
                ta = tab_a[s0 + m]
                tb = tab_b[s0 + m]
                lin = 2 * m + 1 + k
                d = diags[s0 + m + 1]
                dr = d.real
                di = d.imag
                for j in range(_LANES):
                    hn = -((lin - xq[j]) * h[j] + ta * hp[j]) * tb
                    hp[j] = h[j]
                    h[j] = hn
                    v = hn * fac[j]
                    acc_r[j] += dr * v
                    acc_i[j] += di * v
                # eight steps grow |h| by far less than 1e150, so this cannot overflow
                if m % 8 == 7:
                    for j in range(_LANES):
                        if abs(h[j]) > _BIG:
                            h[j] /= _BIG
                            hp[j] /= _BIG
                            scale[j] += _LOG_BIG
                            fac[j] = math.exp(logpre[j] + scale[j])
            wk = 1.0 if k == 0 else 2.0
            sg = 1.0 if k % 2 == 0 else -1.0
            for j in range(lanes):
                if rr[j] == 0.0 and k > 0:
                    continue
                co = math.cos(k * phis[j])
                si = math.sin(k * phis[j])
                # Re[c e^{ik phi}] at (x, y) and Re[c e^{-ik phi}] at (x, -y)
                a = wk * (acc_r[j] * co - acc_i[j] * si)
                b = wk * (acc_r[j] * co + acc_i[j] * si)
                w_pp[j] += a
                w_pm[j] += b
                w_mm[j] += sg * a
                w_mp[j] += sg * b
        for j in range(lanes):
            t = p0 + j
            ix = ix0 + t // nqy
            iy = iy0 + t % nqy
            jx = nx - 1 - ix
            jy = ny - 1 - iy
            out[ix, iy] = w_pp[j]
            out[ix, jy] = w_pm[j]
            out[jx, jy] = w_mm[j]
            out[jx, iy] = w_mp[j]
