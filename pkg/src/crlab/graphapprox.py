"""Fiberwise polynomial approximation on real graphs w = rho(z, zbar).

Pipeline: choose levels s_j where neighbouring fibers are Hausdorff close,
fit a polynomial in z on each fiber, blend the fits with piecewise-linear
hats in s, fit each blended coefficient by a Chebyshev polynomial in s, and
finally replace s by w.  The result is checked on an independent grid.
"""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as Pw

from .errors import ConditionStarViolated, DomainError, NumericError
from .geom import ELLIPTIC, SPECIAL, HoloPolynomial, hausdorff_distance, sample_fiber

COND_MAX = 1e12


@dataclass(frozen=True)
class Box:
    """Compact set K = {|z| <= radius, |s| <= smax}."""

    radius: float
    smax: float

    @classmethod
    def parse(cls, text):
        parts = [float(x) for x in str(text).split(",")]
        if len(parts) != 2 or min(parts) <= 0:
            raise DomainError("box must be 'radius,smax' with positive entries")
        return cls(*parts)


# ---------------------------------------------------------------------------
# fiber fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberFit:
    poly: HoloPolynomial
    coeffs: np.ndarray  # in the basis ((z - center) / scale)^k
    center: complex
    scale: float
    degree: int
    residual: float
    cond: float


def _basis_poly(coeffs, center, scale):
    z = HoloPolynomial.variable(1, 0)
    u = (z - center) * (1.0 / scale)
    out = HoloPolynomial.zero(1)
    for k in range(len(coeffs) - 1, -1, -1):
        out = out * u + complex(coeffs[k])
    return out


def fiber_polyfit(f, fiber, degree, center=None, scale=None, ridge=0.0, cond_max=COND_MAX):
    """Least-squares fit of f on the fiber samples by a polynomial in z.

    The basis is ((z - center) / scale)^k.  By default the center is the
    sample mean and the scale the largest distance from it.  If the
    (possibly ridge-augmented) design matrix has condition number above
    ``cond_max`` the degree is lowered until it does not.
    """
    if fiber.empty:
        raise DomainError(f"empty fiber at level {fiber.s}")
    z = fiber.points
    fz = np.asarray(f(z), dtype=np.complex128)
    if center is None:
        center = complex(np.mean(z))
    if scale is None:
        scale = float(np.max(np.abs(z - center)))
        scale = scale if scale > 0 else 1.0
    u = (z - center) / scale
    N = z.size
    d = int(degree)
    while d >= 0:
        V = np.vander(u, d + 1, increasing=True) / math.sqrt(N)
        A, b = V, fz / math.sqrt(N)
        if ridge > 0:
            A = np.vstack([V, math.sqrt(ridge) * np.eye(d + 1)])
            b = np.concatenate([b, np.zeros(d + 1)])
        sv = np.linalg.svd(A, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        if cond <= cond_max:
            break
        d -= 1
    if d < 0:
        raise NumericError(f"no well-conditioned fit on fiber {fiber.s}", where=fiber.s)
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = float(np.max(np.abs(np.vander(u, d + 1, increasing=True) @ c - fz)))
    return FiberFit(_basis_poly(c, center, scale), c, complex(center), float(scale), d, res, cond)


def residual_plateau(f, fiber, degree, eps, **kw):
    """True when doubling the degree leaves the residual above eps and nearly unchanged."""
    hi = fiber_polyfit(f, fiber, degree, **kw).residual
    lo = fiber_polyfit(f, fiber, max(degree // 2, 0), **kw).residual
    return hi > eps and hi >= 0.9 * lo, hi


# ---------------------------------------------------------------------------
# level selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlicePlan:
    s_levels: np.ndarray
    deltas: np.ndarray
    I: tuple
    eta: float
    probes: tuple = ()

    def hats(self, s):
        """Matrix H[j, i] = phi_j(s_i) of piecewise-linear hats on the levels."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        L = self.s_levels.size
        H = np.zeros((L, s.size))
        if L == 1:
            H[0] = 1.0
            return H
        for j in range(L):
            e = np.zeros(L)
            e[j] = 1.0
            H[j] = np.interp(s, self.s_levels, e)
        return H


def level_range(surface, box, n=401):
    """[min rho, max rho] over |z| <= radius, clipped to [-smax, smax]."""
    r = box.radius * np.linspace(0.0, 1.0, n)[:, None]
    th = np.linspace(-np.pi, np.pi, 4 * n, endpoint=False)[None, :]
    vals = surface.rho(r * np.exp(1j * th))
    lo = max(float(vals.min()), -box.smax)
    hi = min(float(vals.max()), box.smax)
    return lo, hi


def _fiber_points(surface, s, box, mesh, cache):
    key = float(s)
    pts = cache.get(key)
    if pts is None:
        pts = sample_fiber(surface, s, mesh=mesh, rmax=box.radius).points
        cache[key] = pts
    return pts


def select_slices(surface, box, epsilon, probe_mesh=256, eta=None, min_step=1e-12, max_step=None,
                  _cache=None):
    """Choose levels so that neighbouring fibers are within ``eta`` in Hausdorff distance.

    From each level the step is found by dyadic search: the largest step
    (starting from twice the previous one) for which both the end fiber and
    the midpoint fiber are within ``eta`` of the current fiber.  If no step
    above ``min_step`` (relative to the level range) works, the fibers jump
    and condition (*) fails there.
    """
    eta = float(epsilon if eta is None else eta)
    cache = {} if _cache is None else _cache
    lo, hi = level_range(surface, box)
    span = hi - lo
    if span <= 0:
        return SlicePlan(np.array([lo]), np.array([0.0]), (lo, hi), eta)
    # endpoints can be isolated points the marching misses; pull them inward
    for _ in range(60):
        if _fiber_points(surface, lo, box, probe_mesh, cache).size:
            break
        lo += 1e-9 * span
    for _ in range(60):
        if _fiber_points(surface, hi, box, probe_mesh, cache).size:
            break
        hi -= 1e-9 * span
    span = hi - lo
    max_step = span / 8 if max_step is None else max_step
    levels = [lo]
    probes = []
    step = max_step
    s = lo
    while s < hi:
        A = _fiber_points(surface, s, box, probe_mesh, cache)
        step = min(2 * step, max_step)
        while True:
            t = min(s + step, hi)
            B = _fiber_points(surface, t, box, probe_mesh, cache)
            Mid = _fiber_points(surface, 0.5 * (s + t), box, probe_mesh, cache)
            if B.size and Mid.size:
                d = max(hausdorff_distance(A, B), hausdorff_distance(A, Mid))
            else:
                d = math.inf
            probes.append((s, t - s, d))
            if d < eta:
                break
            if step <= min_step * span:
                raise ConditionStarViolated(
                    f"fibers jump at level {s:.6g}: Hausdorff distance {d:.3g} at step {step:.3g}",
                    level=s, distance=d)
            step /= 2
        s = t
        levels.append(s)
    lv = np.array(levels)
    gaps = np.diff(lv)
    deltas = np.maximum(np.append(gaps, 0.0), np.insert(gaps, 0, 0.0))
    return SlicePlan(lv, deltas, (lo, hi), eta, tuple(probes))


# ---------------------------------------------------------------------------
# partition and lift
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientFunctions:
    """a_k(s) = sum_j phi_j(s) coeff_k(P_{s_j}), in the basis ((z - center) / scale)^k."""

    plan: SlicePlan
    table: np.ndarray  # (levels, terms)
    center: complex = 0j
    scale: float = 1.0

    def __call__(self, s):
        return self.plan.hats(s).T @ self.table


def assemble_partition(fits, plan, center=0j, scale=1.0):
    """Blend per-level coefficient vectors with the plan's hat functions."""
    if len(fits) != plan.s_levels.size:
        raise DomainError("need one fit per level")
    rows = [np.asarray(getattr(f, "coeffs", f), dtype=np.complex128) for f in fits]
    width = max(r.size for r in rows)
    table = np.zeros((len(rows), width), dtype=np.complex128)
    for j, r in enumerate(rows):
        table[j, : r.size] = r
    return CoefficientFunctions(plan, table, complex(center), float(scale))


@dataclass(frozen=True)
class LiftResult:
    poly: HoloPolynomial
    sup_error: float
    met: bool
    degree_s: int
    cheb: np.ndarray = field(repr=False)


def weierstrass_lift(a, I, epsilon_w, degree_s=24, grid=2001, center=0j, scale=1.0):
    """Chebyshev least-squares fit of each coefficient function on I, then s -> w.

    ``a`` maps an array of s values to an (len(s), terms) coefficient
    matrix in the basis ((z - center) / scale)^k.
    """
    lo, hi = (float(x) for x in I)
    if isinstance(a, CoefficientFunctions):
        center, scale = a.center, a.scale
    sg = np.linspace(lo, hi, int(grid)) if hi > lo else np.array([lo])
    A = np.asarray(a(sg), dtype=np.complex128)
    if A.ndim == 1:
        A = A[:, None]
    T = A.shape[1]
    if hi > lo:
        x = (2 * sg - lo - hi) / (hi - lo)
        deg = min(int(degree_s), sg.size - 1)
        Y = np.concatenate([A.real, A.imag], axis=1)
        ch = C.chebfit(x, Y, deg)
        ch = ch[:, :T] + 1j * ch[:, T:]
        fit = C.chebval(x, ch).T
        err = float(np.max(np.abs(fit - A)))
        # power series in s: x = alpha s + beta
        alpha, beta = 2.0 / (hi - lo), -(lo + hi) / (hi - lo)
        xs = np.array([beta, alpha])
        pw = np.zeros((deg + 1, T), dtype=np.complex128)
        for k in range(T):
            px = C.cheb2poly(ch[:, k])
            ps = np.zeros(1, dtype=np.complex128)
            for c in px[::-1]:
                ps = Pw.polyadd(Pw.polymul(ps, xs), [c])
            pw[: ps.size, k] = ps
    else:
        deg = 0
        ch = A[:1].copy()
        pw = A[:1].copy()
        err = 0.0
    # Q(z, w) = sum_k sum_m pw[m, k] ((z - center) / scale)^k w^m
    z = HoloPolynomial.variable(2, 0)
    w = HoloPolynomial.variable(2, 1)
    u = (z - center) * (1.0 / scale)
    upow = [HoloPolynomial.constant(2, 1.0)]
    for _ in range(1, T):
        upow.append(upow[-1] * u)
    Q = HoloPolynomial.zero(2)
    wpow = HoloPolynomial.constant(2, 1.0)
    for m in range(pw.shape[0]):
        row = HoloPolynomial.zero(2)
        for k in range(T):
            if pw[m, k] != 0:
                row = row + upow[k] * pw[m, k]
        Q = Q + row * wpow
        wpow = wpow * w
    return LiftResult(Q, err, err <= epsilon_w, deg, ch)


# ---------------------------------------------------------------------------
# end to end
# ---------------------------------------------------------------------------


@dataclass
class ApproxReport:
    epsilon_target: float
    achieved_sup_error: float
    passed: bool
    stage: str
    fiber_residuals: list
    weierstrass_error: float = math.nan
    partition_error: float = math.nan
    lift_error: float = math.nan
    inflation: float = math.nan
    inflation_flag: bool = False
    polynomial: HoloPolynomial = None
    levels: list = field(default_factory=list)
    fiber_failures: list = field(default_factory=list)
    moment_verdict: object = None
    runtime: float = 0.0
    error_grid: np.ndarray = field(default=None, repr=False)

    def to_json(self):
        return {
            "epsilon_target": self.epsilon_target,
            "achieved_sup_error": self.achieved_sup_error,
            "passed": self.passed,
            "stage": self.stage,
            "levels": [float(s) for s in self.levels],
            "fiber_residuals": [[float(s), float(r)] for s, r in self.fiber_residuals],
            "fiber_failures": [[float(s), float(r)] for s, r in self.fiber_failures],
            "weierstrass_error": self.weierstrass_error,
            "partition_error": self.partition_error,
            "lift_error": self.lift_error,
            "inflation": self.inflation,
            "inflation_flag": self.inflation_flag,
            "moment_passed": None if self.moment_verdict is None else bool(self.moment_verdict.passed),
            "polynomial": None if self.polynomial is None else self.polynomial.to_json(),
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, allow_nan=True)

    def error_grid_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "s", "err"])
        if self.error_grid is not None:
            for row in self.error_grid:
                w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def verification_grid(surface, box, n=301):
    """Cartesian grid of M cap K, independent of the fiber samples."""
    g = np.linspace(-box.radius, box.radius, n)
    X, Y = np.meshgrid(g, g)
    z = (X + 1j * Y).ravel()
    z = z[np.abs(z) <= box.radius]
    s = surface.rho(z)
    keep = np.abs(s) <= box.smax
    return z[keep], s[keep]


def graph_approximate(f, surface, box, epsilon, degree_z=12, degree_s=24, ridge=1e-4,
                      mesh=512, eta=None, max_step=None, verify_n=301, threads=1):
    """Approximate f on M cap K by a holomorphic polynomial in (z, w).

    The run passes when the sup error on an independent grid is at most
    5 epsilon.  Fibers whose fit stalls above epsilon (residual plateau under
    degree doubling) stop the pipeline at the fiber stage.
    """
    t0 = time.perf_counter()
    verdict = None
    if surface.kind in (ELLIPTIC, SPECIAL):
        from .moments import moment_integrals, moment_verdict

        lo, hi = level_range(surface, box)
        ts = np.sqrt(np.linspace(max(lo, 0.0), hi, 9)[1:-1])
        verdict = moment_verdict(moment_integrals(f, surface, ts, 4, 256))

    eta = epsilon / 2 if eta is None else eta
    cache = {}
    plan = select_slices(surface, box, epsilon, probe_mesh=mesh, eta=eta, max_step=max_step,
                         _cache=cache)
    scale = box.radius
    def fit_level(s):
        fib = sample_fiber(surface, s, mesh=mesh, rmax=box.radius)
        fit = fiber_polyfit(f, fib, degree_z, center=0j, scale=scale, ridge=ridge)
        stalled = False
        if fit.residual > epsilon:
            stalled, _ = residual_plateau(f, fib, degree_z, epsilon, center=0j, scale=scale, ridge=ridge)
        return fit, stalled

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(fit_level, plan.s_levels))
    else:
        results = [fit_level(s) for s in plan.s_levels]
    fits = [r[0] for r in results]
    residuals = [(float(s), r[0].residual) for s, r in zip(plan.s_levels, results)]
    failures = [(float(s), r[0].residual) for s, r in zip(plan.s_levels, results) if r[1]]
    if failures:
        return ApproxReport(epsilon, math.inf, False, "fiber", residuals,
                            levels=list(plan.s_levels), fiber_failures=failures,
                            moment_verdict=verdict, runtime=time.perf_counter() - t0)

    a = assemble_partition(fits, plan, center=0j, scale=scale)
    lift = weierstrass_lift(a, plan.I, epsilon, degree_s)
    z, s = verification_grid(surface, box, verify_n)
    fz = np.asarray(f(z), dtype=np.complex128)
    Q = lift.poly(np.stack([z, s + 0j], axis=-1))
    err = np.abs(Q - fz)
    achieved = float(err.max())
    # stage errors in function space: blended fits against f, lift against the blend
    P = np.sum(a(s) * (z / scale)[:, None] ** np.arange(a.table.shape[1]), axis=1)
    partition_error = float(np.max(np.abs(P - fz)))
    lift_error = float(np.max(np.abs(Q - P)))
    max_res = max(r for _, r in residuals)
    inflation = partition_error / max_res if max_res > 0 else math.inf
    passed = achieved <= 5 * epsilon
    grid = np.column_stack([z.real, z.imag, s, err])
    return ApproxReport(epsilon, achieved, passed, "done" if passed else "verify", residuals,
                        weierstrass_error=lift.sup_error, partition_error=partition_error,
                        lift_error=lift_error, inflation=float(inflation),
                        inflation_flag=bool(inflation > 3), polynomial=lift.poly,
                        levels=list(plan.s_levels), moment_verdict=verdict,
                        runtime=time.perf_counter() - t0, error_grid=grid)
