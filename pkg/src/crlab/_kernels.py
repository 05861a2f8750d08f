"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: ``_nb_<name>`` compiled with numba ``@njit`` and
``_np_<name>`` written with vectorised numpy.  The public name is bound to one
of them at import time.  Set ``CRLAB_DISABLE_NUMBA=1`` to force the numpy
path (numba is also skipped when it is not importable).

The two paths are required to agree to rounding; ``tests/test_kernels.py``
checks that and ``benchmarks/bench_kernels.py`` times them against each other.
"""

import math
import os

import numpy as np

_flag = os.environ.get("CRLAB_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = _flag not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba ships with the dev env
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


BACKEND = "numba" if USE_NUMBA else "numpy"

_CHUNK = 2048


# ---------------------------------------------------------------------------
# directed Hausdorff distance between finite point sets in R^d
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_directed_hausdorff(a, b):
    # early-break scan: a row cannot raise the running max once its
    # nearest distance drops below it
    cmax = 0.0
    for i in range(a.shape[0]):
        cmin = np.inf
        for j in range(b.shape[0]):
            d = 0.0
            for k in range(a.shape[1]):
                t = a[i, k] - b[j, k]
                d += t * t
            if d < cmin:
                cmin = d
                if cmin < cmax:
                    break
        if cmin > cmax:
            cmax = cmin
    return math.sqrt(cmax)


def _np_directed_hausdorff(a, b):
    cmax = 0.0
    bb = np.sum(b * b, axis=1)
    for lo in range(0, a.shape[0], _CHUNK):
        blk = a[lo:lo + _CHUNK]
        d = np.sum(blk * blk, axis=1)[:, None] - 2.0 * blk @ b.T + bb[None, :]
        cmax = max(cmax, float(np.max(np.min(d, axis=1))))
    return math.sqrt(max(cmax, 0.0))


# ---------------------------------------------------------------------------
# holomorphic monomial sums  sum_t c_t prod_v z_v ** e_tv
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_monomial_eval(exps, coeffs, pts):
    npts, nv = pts.shape
    nt = exps.shape[0]
    emax = 0
    for t in range(nt):
        for v in range(nv):
            if exps[t, v] > emax:
                emax = exps[t, v]
    out = np.zeros(npts, dtype=np.complex128)
    pw = np.empty((nv, emax + 1), dtype=np.complex128)
    for i in range(npts):
        for v in range(nv):
            pw[v, 0] = 1.0
            for e in range(1, emax + 1):
                pw[v, e] = pw[v, e - 1] * pts[i, v]
        acc = 0.0 + 0.0j
        for t in range(nt):
            term = coeffs[t]
            for v in range(nv):
                term = term * pw[v, exps[t, v]]
            acc += term
        out[i] = acc
    return out


def _np_monomial_eval(exps, coeffs, pts):
    npts, nv = pts.shape
    if exps.shape[0] == 0:
        return np.zeros(npts, dtype=np.complex128)
    emax = int(exps.max())
    pw = np.empty((nv, emax + 1, npts), dtype=np.complex128)
    pw[:, 0, :] = 1.0
    for e in range(1, emax + 1):
        pw[:, e, :] = pw[:, e - 1, :] * pts.T
    out = np.zeros(npts, dtype=np.complex128)
    for t in range(exps.shape[0]):
        term = np.full(npts, coeffs[t], dtype=np.complex128)
        for v in range(nv):
            term = term * pw[v, exps[t, v]]
        out += term
    return out


# ---------------------------------------------------------------------------
# radial root scan:  p_m(r) = sum_d pc[m, d] r^d = s  on (0, rmax]
# ---------------------------------------------------------------------------


@njit(cache=True)
def _poly_val_der(c, x):
    v = 0.0
    dv = 0.0
    for d in range(c.shape[0] - 1, -1, -1):
        dv = dv * x + v
        v = v * x + c[d]
    return v, dv


@njit(cache=True)
def _nb_radial_roots(pc, s, rmax, ngrid, maxroots, maxit):
    m = pc.shape[0]
    roots = np.full((m, maxroots), np.nan)
    fail = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        c = pc[i]
        nfound = 0
        lo = rmax * 1e-12
        flo = _poly_val_der(c, lo)[0] - s
        for k in range(1, ngrid + 1):
            hi = rmax * k / ngrid
            fhi = _poly_val_der(c, hi)[0] - s
            if flo == 0.0 or flo * fhi < 0.0 or (fhi == 0.0 and k == ngrid):
                a, b, fa = lo, hi, flo
                if flo == 0.0:
                    x = lo
                elif fhi == 0.0:
                    x = hi
                else:
                    x = 0.5 * (a + b)
                    ok = False
                    for _ in range(maxit):
                        fx, dfx = _poly_val_der(c, x)
                        fx -= s
                        if fx == 0.0:
                            ok = True
                            break
                        if fa * fx < 0.0:
                            b = x
                        else:
                            a, fa = x, fx
                        xn = x - fx / dfx if dfx != 0.0 else 0.5 * (a + b)
                        if not (a < xn < b):
                            xn = 0.5 * (a + b)
                        if abs(xn - x) <= 4e-16 * max(1.0, abs(x)):
                            x = xn
                            ok = True
                            break
                        x = xn
                    if not ok:
                        fail[i] = True
                if nfound < maxroots:
                    roots[i, nfound] = x
                    nfound += 1
            lo, flo = hi, fhi
    return roots, fail


def _np_radial_roots(pc, s, rmax, ngrid, maxroots, maxit):
    m, nd = pc.shape

    def peval(X):
        v = np.zeros_like(X)
        for d in range(nd - 1, -1, -1):
            v = v * X + pc[:, d][:, None]
        return v

    grid = rmax * np.arange(1, ngrid + 1) / ngrid
    xs = np.concatenate(([rmax * 1e-12], grid))
    X = np.broadcast_to(xs, (m, xs.size)).copy()
    F = peval(X) - s
    flo, fhi = F[:, :-1], F[:, 1:]
    last = np.zeros_like(flo, dtype=bool)
    last[:, -1] = True
    hit = (flo == 0.0) | (flo * fhi < 0.0) | ((fhi == 0.0) & last)
    ii, kk = np.nonzero(hit)
    a = xs[kk].copy()
    b = xs[kk + 1].copy()
    fa = flo[ii, kk].copy()
    x = 0.5 * (a + b)
    x[flo[ii, kk] == 0.0] = a[flo[ii, kk] == 0.0]
    fhi_h = fhi[ii, kk]
    exact_hi = (fhi_h == 0.0) & (flo[ii, kk] != 0.0)
    x[exact_hi] = b[exact_hi]
    active = (flo[ii, kk] != 0.0) & ~exact_hi
    rows = pc[ii]
    for _ in range(maxit):
        if not active.any():
            break
        fx = np.zeros_like(x)
        dfx = np.zeros_like(x)
        for d in range(nd - 1, -1, -1):
            dfx = dfx * x + fx
            fx = fx * x + rows[:, d]
        fx -= s
        done = active & (fx == 0.0)
        upd = active & ~done
        left = upd & (fa * fx < 0.0)
        b = np.where(left, x, b)
        move = upd & ~left
        a = np.where(move, x, a)
        fa = np.where(move, fx, fa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = np.where(dfx != 0.0, x - fx / dfx, 0.5 * (a + b))
        bad = ~((a < xn) & (xn < b))
        xn = np.where(bad, 0.5 * (a + b), xn)
        conv = upd & (np.abs(xn - x) <= 4e-16 * np.maximum(1.0, np.abs(x)))
        x = np.where(upd, xn, x)
        active = upd & ~conv
    roots = np.full((m, maxroots), np.nan)
    fail = np.zeros(m, dtype=bool)
    fail[ii[active]] = True
    count = np.zeros(m, dtype=np.int64)
    for j in range(ii.size):
        r = ii[j]
        if count[r] < maxroots:
            roots[r, count[r]] = x[j]
            count[r] += 1
    return roots, fail


# ---------------------------------------------------------------------------
# angular root scan:  Re sum_k q[m, k] e^{i f_k th} = s  on [-pi, pi)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _trig_val_der(q, freqs, th):
    v = 0.0
    dv = 0.0
    for k in range(q.shape[0]):
        e = complex(math.cos(freqs[k] * th), math.sin(freqs[k] * th))
        t = q[k] * e
        v += t.real
        dv += (1j * freqs[k] * t).real
    return v, dv


@njit(cache=True)
def _nb_angular_roots(q, freqs, s, ntheta, maxroots, maxit):
    m = q.shape[0]
    roots = np.full((m, maxroots), np.nan)
    fail = np.zeros(m, dtype=np.bool_)
    h = 2.0 * math.pi / ntheta
    for i in range(m):
        nfound = 0
        lo = -math.pi
        flo = _trig_val_der(q[i], freqs, lo)[0] - s
        for k in range(1, ntheta + 1):
            hi = -math.pi + k * h
            fhi = _trig_val_der(q[i], freqs, hi)[0] - s
            if flo == 0.0 or flo * fhi < 0.0:
                a, b, fa = lo, hi, flo
                x = lo if flo == 0.0 else 0.5 * (a + b)
                if flo != 0.0:
                    ok = False
                    for _ in range(maxit):
                        fx, dfx = _trig_val_der(q[i], freqs, x)
                        fx -= s
                        if fx == 0.0:
                            ok = True
                            break
                        if fa * fx < 0.0:
                            b = x
                        else:
                            a, fa = x, fx
                        xn = x - fx / dfx if dfx != 0.0 else 0.5 * (a + b)
                        if not (a < xn < b):
                            xn = 0.5 * (a + b)
                        if abs(xn - x) <= 4e-16 * max(1.0, abs(x)):
                            x = xn
                            ok = True
                            break
                        x = xn
                    if not ok:
                        fail[i] = True
                if nfound < maxroots:
                    roots[i, nfound] = x
                    nfound += 1
            lo, flo = hi, fhi
    return roots, fail


def _np_angular_roots(q, freqs, s, ntheta, maxroots, maxit):
    m = q.shape[0]
    th = -np.pi + 2.0 * np.pi * np.arange(ntheta + 1) / ntheta
    E = np.exp(1j * np.outer(freqs, th))
    F = (q @ E).real - s
    flo, fhi = F[:, :-1], F[:, 1:]
    hit = (flo == 0.0) | (flo * fhi < 0.0)
    ii, kk = np.nonzero(hit)
    a = th[kk].copy()
    b = th[kk + 1].copy()
    fa = flo[ii, kk].copy()
    exact = fa == 0.0
    x = np.where(exact, a, 0.5 * (a + b))
    active = ~exact
    rows = q[ii]
    for _ in range(maxit):
        if not active.any():
            break
        e = np.exp(1j * np.outer(x, freqs))
        t = rows * e
        fx = t.sum(axis=1).real - s
        dfx = (1j * t * freqs).sum(axis=1).real
        done = active & (fx == 0.0)
        upd = active & ~done
        left = upd & (fa * fx < 0.0)
        b = np.where(left, x, b)
        move = upd & ~left
        a = np.where(move, x, a)
        fa = np.where(move, fx, fa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = np.where(dfx != 0.0, x - fx / dfx, 0.5 * (a + b))
        bad = ~((a < xn) & (xn < b))
        xn = np.where(bad, 0.5 * (a + b), xn)
        conv = upd & (np.abs(xn - x) <= 4e-16 * np.maximum(1.0, np.abs(x)))
        x = np.where(upd, xn, x)
        active = upd & ~conv
    roots = np.full((m, maxroots), np.nan)
    fail = np.zeros(m, dtype=bool)
    fail[ii[active]] = True
    count = np.zeros(m, dtype=np.int64)
    for j in range(ii.size):
        r = ii[j]
        if count[r] < maxroots:
            roots[r, count[r]] = x[j]
            count[r] += 1
    return roots, fail


# ---------------------------------------------------------------------------
# Gaussian convolution sum  sum_q w_q exp(-n |z - zeta_q|^2)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_gauss_conv(nodes, weights, zs, n):
    out = np.zeros(zs.shape[0], dtype=np.complex128)
    for p in range(zs.shape[0]):
        zr = zs[p].real
        zi = zs[p].imag
        acc = 0.0 + 0.0j
        for q in range(nodes.shape[0]):
            dr = zr - nodes[q].real
            di = zi - nodes[q].imag
            acc += weights[q] * math.exp(-n * (dr * dr + di * di))
        out[p] = acc
    return out


def _np_gauss_conv(nodes, weights, zs, n):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    step = max(1, (1 << 22) // max(nodes.size, 1))
    for lo in range(0, zs.size, step):
        blk = zs[lo:lo + step]
        d2 = np.abs(blk[:, None] - nodes[None, :]) ** 2
        out[lo:lo + step] = np.exp(-n * d2) @ weights
    return out


# ---------------------------------------------------------------------------
# pairwise minimum relative separation of sampled paths
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_trace_separation(traces):
    npath, nt, dim = traces.shape
    norms = np.zeros((npath, nt))
    for i in range(npath):
        for t in range(nt):
            acc = 0.0
            for k in range(dim):
                acc += abs(traces[i, t, k]) ** 2
            norms[i, t] = math.sqrt(acc)
    out = np.full((npath, npath), np.inf)
    for i in range(npath):
        for j in range(i + 1, npath):
            best = np.inf
            for t1 in range(nt):
                for t2 in range(nt):
                    acc = 0.0
                    for k in range(dim):
                        acc += abs(traces[i, t1, k] - traces[j, t2, k]) ** 2
                    den = norms[i, t1] + norms[j, t2]
                    if den > 0.0:
                        r = math.sqrt(acc) / den
                        if r < best:
                            best = r
            out[i, j] = best
            out[j, i] = best
    return out


def _np_trace_separation(traces):
    npath, nt, dim = traces.shape
    norms = np.linalg.norm(traces, axis=2)
    out = np.full((npath, npath), np.inf)
    for i in range(npath - 1):
        rest = traces[i + 1:]
        diff = traces[i][None, :, None, :] - rest[:, None, :, :]
        dist = np.sqrt(np.sum(np.abs(diff) ** 2, axis=3))
        den = norms[i][None, :, None] + norms[i + 1:][:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(den > 0.0, dist / den, np.inf)
        best = rel.reshape(rel.shape[0], -1).min(axis=1)
        out[i, i + 1:] = best
        out[i + 1:, i] = best
    return out


# ---------------------------------------------------------------------------
# public dispatch
# ---------------------------------------------------------------------------


def _pick(name):
    return globals()[("_nb_" if USE_NUMBA else "_np_") + name]


def directed_hausdorff(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return float(_pick("directed_hausdorff")(a, b))


def monomial_eval(exps, coeffs, pts):
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    pts = np.ascontiguousarray(pts, dtype=np.complex128)
    if exps.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=np.complex128)
    return _pick("monomial_eval")(exps, coeffs, pts)


def radial_roots(pc, s, rmax, ngrid=64, maxroots=4, maxit=200):
    pc = np.ascontiguousarray(pc, dtype=np.float64)
    return _pick("radial_roots")(pc, float(s), float(rmax), int(ngrid), int(maxroots), int(maxit))


def angular_roots(q, freqs, s, ntheta=256, maxroots=8, maxit=200):
    q = np.ascontiguousarray(q, dtype=np.complex128)
    freqs = np.ascontiguousarray(freqs, dtype=np.float64)
    return _pick("angular_roots")(q, freqs, float(s), int(ntheta), int(maxroots), int(maxit))


def gauss_conv(nodes, weights, zs, n):
    nodes = np.ascontiguousarray(nodes, dtype=np.complex128).ravel()
    weights = np.ascontiguousarray(weights, dtype=np.complex128).ravel()
    zs = np.ascontiguousarray(zs, dtype=np.complex128).ravel()
    return _pick("gauss_conv")(nodes, weights, zs, float(n))


def trace_separation(traces):
    traces = np.ascontiguousarray(traces, dtype=np.complex128)
    return _pick("trace_separation")(traces)
