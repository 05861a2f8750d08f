"""Attached analytic discs, iterated disc hulls and shrinking disc families.

Set oracles are residual functions: they map an (N, dim) array of points to
non-negative numbers that vanish exactly on the set.  A disc is attached to
a set when the oracle residual of its boundary samples is below a tolerance.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DomainError, InfeasiblePointError, NumericError
from .geom import AnalyticDisc, HoloPolynomial, boundary_residual, weighted_dilate

ATTACH_TOL = 1e-8
MEMBER_TOL = 1e-12
BOUNDARY_M = 256


def _excess(x, bound):
    return np.maximum(0.0, x - bound)


# ---------------------------------------------------------------------------
# zbar-z graph w = conj(z1) z2: set oracles
# ---------------------------------------------------------------------------


def box_excess(pts, C):
    return np.sum(_excess(np.abs(pts), C), axis=-1)


def a0_residual(pts, C):
    """Distance-like residual to A0 = Delta_C cap {w = conj(z1) z2}."""
    pts = np.asarray(pts, dtype=np.complex128)
    z1, z2, w = pts[..., 0], pts[..., 1], pts[..., 2]
    return np.abs(w - np.conj(z1) * z2) + box_excess(pts, C)


def a1_residual(pts, C):
    """Residual to A1: Im(w z1 conj z2) = 0, Re(.) >= |z1 z2|^2, |z2|/C <= |z1| <= C|z2|, in Delta_C."""
    pts = np.asarray(pts, dtype=np.complex128)
    z1, z2, w = pts[..., 0], pts[..., 1], pts[..., 2]
    q = w * z1 * np.conj(z2)
    a1, a2 = np.abs(z1), np.abs(z2)
    return (np.abs(q.imag) + _excess(np.abs(z1 * z2) ** 2, q.real)
            + _excess(a2 / C, a1) + _excess(a1, C * a2) + box_excess(pts, C))


@dataclass(frozen=True)
class TarConstants:
    """Constants of the second disc family: box size C, |z1| <= eps, and K1, K2, K3.

    A2 = {|z1| <= eps, 1/K1 <= |z2| <= |w|/K2, K3/C <= |w| <= C}.
    """

    C: float = 4.0
    eps: float = 0.04
    K1: float = 7.9
    K2: float = 18.1
    K3: float = None

    def __post_init__(self):
        if self.C <= 3:
            raise DomainError("C must exceed 3")
        if self.K3 is None:
            object.__setattr__(self, "K3", 0.5 * (self.C * self.K2 / self.K1 + self.C ** 2))

    @staticmethod
    def root_range(eps, m=4096):
        """min and max of |zeta*(u)| over |u| <= eps (attained on |u| = eps)."""
        u = eps * np.exp(2j * np.pi * np.arange(m) / m)
        z = 1.25 - np.sqrt(9 / 16 - 4.5 * u)
        a = np.abs(z)
        return float(a.min()), float(a.max())

    @classmethod
    def derive(cls, C=4.0, eps=0.04, margin=1e-3):
        """Pick K1, K2 at the edge of what eps allows and K3 at the midpoint of its range."""
        zmin, zmax = cls.root_range(eps)
        K1 = C / zmax * (1 - margin)
        K2 = 9 / zmin * (1 + margin)
        return cls(C, eps, K1, K2)

    def feasibility(self):
        """Reasons why some point of A2 may have no disc; empty when all points do."""
        zmin, zmax = self.root_range(self.eps)
        out = []
        if self.K1 > self.C / zmax:
            out.append(f"K1={self.K1:g} exceeds C/max|zeta*|={self.C / zmax:g}")
        if self.K2 < 9 / zmin:
            out.append(f"K2={self.K2:g} below 9/min|zeta*|={9 / zmin:g}")
        if not (self.C * self.K2 / self.K1 < self.K3 < self.C ** 2):
            out.append("K3 outside (C K2 / K1, C^2)")
        return out

    def a2_residual(self, pts):
        pts = np.asarray(pts, dtype=np.complex128)
        a1, a2, aw = (np.abs(pts[..., i]) for i in range(3))
        return (_excess(a1, self.eps) + _excess(1 / self.K1, a2) + _excess(a2, aw / self.K2)
                + _excess(self.K3 / self.C, aw) + _excess(aw, self.C))

    def to_json(self):
        return {"C": self.C, "eps": self.eps, "K1": self.K1, "K2": self.K2, "K3": self.K3}


def disc_tar_step1(p, C=4.0, tol=MEMBER_TOL):
    """Disc attached to A0 through a point p of A1.

    Points of A0 get the constant disc.  Otherwise with lambda^2 = w z1 / z2
    the disc is (lambda zeta, w zeta / lambda, w) with zeta* = z1 / lambda;
    when z2 = 0 (hence z1 = 0) it is (conj(w) zeta, zeta, w) with zeta* = 0.
    """
    p = np.asarray(p, dtype=np.complex128).ravel()
    if p.size != 3:
        raise DomainError("p must be (z1, z2, w)")
    scale = 1.0 + float(np.max(np.abs(p))) ** 2
    if a0_residual(p, C) <= tol * scale:
        return AnalyticDisc.constant(p)
    r1 = float(a1_residual(p, C))
    if r1 > tol * scale ** 2:
        raise DomainError(f"point not in A1 (residual {r1:.3e}): {_a1_violation(p, C)}")
    z1, z2, w = p
    if abs(z2) <= tol:
        return AnalyticDisc([[0, np.conj(w)], [0, 1], [w, 0]], marked=0.0)
    lam = math.sqrt(max((w * z1 * np.conj(z2)).real, 0.0)) / abs(z2)
    if lam == 0:
        raise DomainError("degenerate point: lambda = 0")
    marked = z1 / lam
    if abs(marked) > 1:
        marked = marked / abs(marked)
    return AnalyticDisc([[0, lam], [0, w / lam], [w, 0]], marked=marked)


def _a1_violation(p, C):
    z1, z2, w = p
    q = w * z1 * np.conj(z2)
    if np.max(np.abs(p)) > C:
        return f"outside the polydisc of radius {C}"
    if abs(q.imag) > MEMBER_TOL:
        return "Im(w z1 conj z2) != 0"
    if q.real < abs(z1 * z2) ** 2:
        return "Re(w z1 conj z2) < |z1 z2|^2"
    return "|z2|/C <= |z1| <= C|z2| fails"


def _step2_root(u):
    return 1.25 - np.sqrt(9 / 16 - 4.5 * u)


def disc_tar_step2(p, consts=None, tol=MEMBER_TOL, maxit=200):
    """Disc attached to A1 through a point p of A2.

    phi(zeta) = (e^{i th} (4/9)(zeta - 1/2)(1 - zeta/2), w lam e^{i th} zeta, w),
    with th fixed so that w lam e^{i th} zeta* has the argument of z2 and
    lam then chosen to match |z2|.
    """
    consts = TarConstants() if consts is None else consts
    p = np.asarray(p, dtype=np.complex128).ravel()
    if p.size != 3:
        raise DomainError("p must be (z1, z2, w)")
    r2 = float(consts.a2_residual(p))
    if r2 > tol:
        raise DomainError(f"point not in A2 (residual {r2:.3e})")
    z1, z2, w = p
    base = np.angle(z2) - np.angle(w)
    th = base
    for _ in range(maxit):
        zs = _step2_root(np.exp(-1j * th) * z1)
        new = base - np.angle(zs)
        if abs(new - th) <= 1e-15 * (1 + abs(th)):
            th = new
            break
        th = new
    else:
        raise NumericError(f"argument iteration did not converge for z1={z1}", where=complex(z1))
    zs = complex(_step2_root(np.exp(-1j * th) * z1))
    lam = abs(z2) / (abs(w) * abs(zs))
    C = consts.C
    if C * abs(w) * lam < 1 - 1e-12:
        raise InfeasiblePointError(f"lambda={lam:.6g} below 1/(C|w|)={1 / (C * abs(w)):.6g}")
    if abs(w) * lam > C / 9 * (1 + 1e-12) or lam > 1:
        raise InfeasiblePointError(f"lambda={lam:.6g} too large for the A1 ratio bound")
    if abs(zs) > 1:
        raise InfeasiblePointError("root outside the closed disc")
    e = np.exp(1j * th)
    coeffs = [[-2 / 9 * e, 5 / 9 * e, -2 / 9 * e], [0, w * lam * e, 0], [w, 0, 0]]
    return AnalyticDisc(coeffs, marked=zs)


def step2_boundary_profile(m=256):
    """(4/9)(zeta - 1/2)(1/zeta - 1/2) on m boundary points."""
    zeta = np.exp(2j * np.pi * np.arange(m) / m)
    return 4 / 9 * (zeta - 0.5) * (1 / zeta - 0.5)


# ---------------------------------------------------------------------------
# w = |z1|^2 - |z2|^2 in C^2 x R
# ---------------------------------------------------------------------------


def quadric_residual(pts, R=math.inf):
    """Residual to {s = |z1|^2 - |z2|^2, s real}, optionally within |z_i| <= R."""
    pts = np.asarray(pts, dtype=np.complex128)
    z1, z2, s = pts[..., 0], pts[..., 1], pts[..., 2]
    res = np.abs(s - (np.abs(z1) ** 2 - np.abs(z2) ** 2))
    if math.isfinite(R):
        res = res + _excess(np.abs(z1), R) + _excess(np.abs(z2), R)
    return res


def disc_anote(p, branch=None, tol=MEMBER_TOL):
    """Linear disc through p attached to s = |z1|^2 - |z2|^2.

    Branch "A1": (R zeta, z2, s) with R^2 = |z2|^2 + s >= |z1|^2.
    Branch "A2": (z1, R zeta, s) with R^2 = |z1|^2 - s >= |z2|^2.
    Points already on the graph get the constant disc.
    """
    p = np.asarray(p, dtype=np.complex128).ravel()
    if p.size != 3:
        raise DomainError("p must be (z1, z2, s)")
    z1, z2, s = p
    if abs(s.imag) > tol:
        raise DomainError("third coordinate must be real")
    s = s.real
    if quadric_residual(p) <= tol:
        return AnalyticDisc.constant(np.array([z1, z2, s]))
    if branch is None:
        branch = "A1" if abs(z1) ** 2 <= abs(z2) ** 2 + s else "A2"
    if branch == "A1":
        R2 = abs(z2) ** 2 + s
        if R2 <= 0 or abs(z1) ** 2 > R2 * (1 + tol):
            raise DomainError("branch A1 needs |z1|^2 <= |z2|^2 + s and |z2|^2 + s > 0")
        R = math.sqrt(R2)
        return AnalyticDisc([[0, R], [z2, 0], [s, 0]], marked=z1 / R)
    if branch == "A2":
        R2 = abs(z1) ** 2 - s
        if R2 <= 0 or abs(z2) ** 2 > R2 * (1 + tol):
            raise DomainError("branch A2 needs |z2|^2 <= |z1|^2 - s and |z1|^2 - s > 0")
        R = math.sqrt(R2)
        return AnalyticDisc([[z1, 0], [0, R], [s, 0]], marked=z2 / R)
    raise DomainError(f"unknown branch {branch!r}")


# ---------------------------------------------------------------------------
# generators, certificates and clouds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Generator:
    """Disc constructor for one hull stage.

    ``build(p)`` returns a disc through p (or raises DomainError), ``target``
    is the residual oracle of the set the disc must be attached to, and
    ``sample(rng, n)`` draws candidate points.
    """

    name: str
    stage: int
    build: Callable
    target: Callable
    sample: Callable = None


@dataclass(frozen=True)
class Certificate:
    chain: tuple
    residual: float
    through: float
    generator: str


def _through_error(disc, p):
    if disc.marked is None:
        return math.inf
    return float(np.max(np.abs(disc(disc.marked) - p)))


def certify(p, generators, stage, attach_tol=ATTACH_TOL, chain_m=32, m=BOUNDARY_M):
    """Try every generator of the given stage at p.

    A stage-j disc is certified when its boundary residual against the
    stage-(j-1) oracle and its point-through error are below attach_tol,
    and, if stage j-1 has generators, sampled boundary points carry their
    own certificates one stage down.  Returns a Certificate or None.
    """
    p = np.asarray(p, dtype=np.complex128)
    for g in generators:
        if g.stage != stage:
            continue
        try:
            disc = g.build(p)
        except DomainError:
            continue
        res = boundary_residual(disc, g.target, m)
        thr = _through_error(disc, p)
        if res > attach_tol or thr > attach_tol:
            continue
        chain = [disc]
        worst = res
        lower = [h for h in generators if h.stage == stage - 1]
        if lower and not disc.is_constant():
            ok = True
            for b in disc.boundary_samples(chain_m):
                sub = certify(b, lower, stage - 1, attach_tol, chain_m, m)
                if sub is None:
                    ok = False
                    break
                worst = max(worst, sub.residual)
                if len(chain) == 1:
                    chain.extend(sub.chain)
            if not ok:
                continue
        return Certificate(tuple(chain), float(worst), thr, g.name)
    return None


class HullCloud:
    """Sampled points of an iterated disc hull with per-point provenance."""

    def __init__(self, dim):
        self.dim = int(dim)
        self._points, self._stage, self._res, self._chains, self._gen = [], [], [], [], []
        self._frozen = False

    def add(self, p, stage, cert=None):
        if self._frozen:
            raise RuntimeError("cloud is frozen")
        self._points.append(np.asarray(p, dtype=np.complex128).reshape(self.dim))
        self._stage.append(int(stage))
        self._res.append(0.0 if cert is None else cert.residual)
        self._chains.append(() if cert is None else cert.chain)
        self._gen.append("seed" if cert is None else cert.generator)

    def freeze(self):
        self._frozen = True
        return self

    def __len__(self):
        return len(self._points)

    @property
    def points(self):
        if not self._points:
            return np.zeros((0, self.dim), dtype=np.complex128)
        return np.array(self._points)

    @property
    def stage(self):
        return np.array(self._stage, dtype=int)

    @property
    def residuals(self):
        return np.array(self._res, dtype=float)

    @property
    def provenance(self):
        return list(self._chains)

    @property
    def generators(self):
        return list(self._gen)

    def subset(self, stage):
        idx = np.nonzero(self.stage == stage)[0]
        out = HullCloud(self.dim)
        for i in idx:
            out._points.append(self._points[i])
            out._stage.append(self._stage[i])
            out._res.append(self._res[i])
            out._chains.append(self._chains[i])
            out._gen.append(self._gen[i])
        return out.freeze()

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = []
        for i in range(self.dim):
            head += [f"re{i + 1}", f"im{i + 1}"]
        w.writerow(head + ["stage", "residual"])
        for p, st, r in zip(self._points, self._stage, self._res):
            row = []
            for c in p:
                row += [repr(float(c.real)), repr(float(c.imag))]
            w.writerow(row + [st, repr(float(r))])
        return buf.getvalue()

    def to_json(self):
        return {
            "dim": self.dim,
            "points": [[[float(c.real), float(c.imag)] for c in p] for p in self._points],
            "stage": list(self._stage),
            "residual": [float(r) for r in self._res],
            "generator": list(self._gen),
            "provenance": [[d.to_json() for d in ch] for ch in self._chains],
        }

    @classmethod
    def from_json(cls, d):
        out = cls(d["dim"])
        for p, st, r, g, ch in zip(d["points"], d["stage"], d["residual"], d["generator"],
                                   d["provenance"]):
            out._points.append(np.array([complex(a, b) for a, b in p]))
            out._stage.append(st)
            out._res.append(r)
            out._gen.append(g)
            out._chains.append(tuple(AnalyticDisc.from_json(x) for x in ch))
        return out.freeze()

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def hull_iterate(seed_samples, generators, k, samples=200, rng=None, attach_tol=ATTACH_TOL,
                 candidates=None, dim=None, threads=1):
    """Monte-Carlo inner approximation of DH^k of the seed set.

    Stage 0 holds the seed samples.  For each stage j = 1..k every generator
    of that stage draws candidates (or uses ``candidates[j]``) and keeps the
    points it certifies.  A missing certificate does not mean non-membership.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    rng = np.random.default_rng(rng)
    seed_samples = np.asarray(seed_samples, dtype=np.complex128)
    if dim is None:
        if not seed_samples.size:
            raise DomainError("pass dim when the seed is empty")
        dim = seed_samples.shape[-1]
    seed_samples = seed_samples.reshape(-1, dim)
    cloud = HullCloud(dim)
    for p in seed_samples:
        cloud.add(p, 0)
    for j in range(1, k + 1):
        for g in generators:
            if g.stage != j:
                continue
            if candidates is not None and j in candidates:
                cand = np.asarray(candidates[j], dtype=np.complex128)
            elif g.sample is not None:
                cand = g.sample(rng, samples)
            else:
                continue
            certs = _map(lambda p: certify(p, generators, j, attach_tol), cand, threads)
            for p, cert in zip(cand, certs):
                if cert is not None:
                    cloud.add(p, j, cert)
    return cloud.freeze()


def _map(fn, items, threads):
    """Ordered map, threaded when threads > 1."""
    if threads <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# samplers for the zbar-z construction
# ---------------------------------------------------------------------------


def _phase(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def sample_a0(rng, n, C=4.0):
    """Random points of A0 = Delta_C cap {w = conj(z1) z2}."""
    out = np.zeros((n, 3), dtype=np.complex128)
    i = 0
    while i < n:
        z1 = C * math.sqrt(rng.random()) * _phase(rng, 1)[0]
        z2 = C * math.sqrt(rng.random()) * _phase(rng, 1)[0]
        w = np.conj(z1) * z2
        if abs(w) <= C:
            out[i] = (z1, z2, w)
            i += 1
    return out


def sample_a1(rng, n, C=4.0):
    """Random points of A1 away from A0."""
    out = np.zeros((n, 3), dtype=np.complex128)
    i = 0
    while i < n:
        a2 = rng.uniform(0.05, C)
        a1 = a2 * math.exp(rng.uniform(-math.log(C), math.log(C)))
        if a1 > C:
            continue
        lo, hi = (a1 * a2) ** 2, C * a1 * a2
        if hi <= lo:
            continue
        r = rng.uniform(lo, hi)
        z1 = a1 * _phase(rng, 1)[0]
        z2 = a2 * _phase(rng, 1)[0]
        w = r / (z1 * np.conj(z2))
        out[i] = (z1, z2, w)
        i += 1
    return out


def sample_a2(rng, n, consts):
    """Random points of A2."""
    C, K1, K2, K3 = consts.C, consts.K1, consts.K2, consts.K3
    z1 = consts.eps * np.sqrt(rng.random(n)) * _phase(rng, n)
    aw = rng.uniform(K3 / C, C, n)
    lo = 1 / K1
    hi = aw / K2
    if np.any(hi < lo):
        raise DomainError("A2 is empty for these constants")
    a2 = lo + (hi - lo) * rng.random(n)
    return np.stack([z1, a2 * _phase(rng, n), aw * _phase(rng, n)], axis=1)


def tar_generators(consts=None):
    consts = TarConstants.derive() if consts is None else consts
    C = consts.C
    return [
        Generator("tar-step1", 1, lambda p: disc_tar_step1(p, C), lambda x: a0_residual(x, C),
                  lambda rng, n: sample_a1(rng, n, C)),
        Generator("tar-step2", 2, lambda p: disc_tar_step2(p, consts), lambda x: a1_residual(x, C),
                  lambda rng, n: sample_a2(rng, n, consts)),
    ]


def sample_anote(rng, n, branch, R=1.0):
    """Random points admissible for disc_anote on the given branch."""
    out = np.zeros((n, 3), dtype=np.complex128)
    for i in range(n):
        a = R * math.sqrt(rng.random())
        s = rng.uniform(-0.9 * a * a, R * R)
        rad = math.sqrt(a * a + s) * math.sqrt(rng.random())
        fixed = a * _phase(rng, 1)[0]
        free = rad * _phase(rng, 1)[0]
        if branch == "A1":
            out[i] = (free, fixed, s)
        else:
            out[i] = (fixed, free, -s)
    return out


def anote_generators(R=math.inf):
    return [
        Generator("anote-A1", 1, lambda p: disc_anote(p, "A1"), lambda x: quadric_residual(x, R),
                  lambda rng, n: sample_anote(rng, n, "A1")),
        Generator("anote-A2", 1, lambda p: disc_anote(p, "A2"), lambda x: quadric_residual(x, R),
                  lambda rng, n: sample_anote(rng, n, "A2")),
    ]


# ---------------------------------------------------------------------------
# torus example: X = X1 cup X2 in C^2 and its homogenized version in C^3
# ---------------------------------------------------------------------------


def _torus_split(pts, variant):
    pts = np.asarray(pts, dtype=np.complex128)
    if variant == "X":
        r = np.ones(pts.shape[:-1])
        extra = np.zeros(pts.shape[:-1])
    else:
        z3 = pts[..., 2]
        r = np.clip(z3.real, 0.0, 1.0)
        extra = np.abs(z3.imag) + np.abs(z3.real - r)
    return pts[..., 0], pts[..., 1], r, extra


def torus_x_residual(pts, variant="X"):
    """Residual to X (or X'): |z1| = r, |z2| = r, Im z2 >= 0, or |z1| = 2r, |z2| = r, Im z2 <= 0."""
    z1, z2, r, extra = _torus_split(pts, variant)
    base = np.abs(np.abs(z2) - r) + extra
    up = np.abs(np.abs(z1) - r) + _excess(-z2.imag, 0.0)
    down = np.abs(np.abs(z1) - 2 * r) + _excess(z2.imag, 0.0)
    return base + np.minimum(up, down)


def torus_dh_residual(pts, variant="X"):
    """Residual to DH(X): as X with the z1 circles filled in."""
    z1, z2, r, extra = _torus_split(pts, variant)
    base = np.abs(np.abs(z2) - r) + extra
    up = _excess(np.abs(z1), r) + _excess(-z2.imag, 0.0)
    down = _excess(np.abs(z1), 2 * r) + _excess(z2.imag, 0.0)
    return base + np.minimum(up, down)


def _torus_stage1(p, variant, tol=MEMBER_TOL):
    z1, z2, r, extra = _torus_split(p, variant)
    z1, z2, r, extra = complex(z1), complex(z2), float(r), float(extra)
    if extra > tol or abs(abs(z2) - r) > tol:
        raise DomainError("need |z2| = r")
    tail = [] if variant == "X" else [[r, 0]]
    if r == 0:
        return AnalyticDisc.constant(np.asarray(p, dtype=np.complex128))
    if z2.imag >= -tol and abs(z1) <= r * (1 + tol):
        return AnalyticDisc([[0, r], [z2, 0]] + tail, marked=z1 / r)
    if z2.imag <= tol and abs(z1) <= 2 * r * (1 + tol):
        return AnalyticDisc([[0, 2 * r], [z2, 0]] + tail, marked=z1 / (2 * r))
    raise DomainError("point not in DH(X)")


def _torus_stage2(p, variant, tol=MEMBER_TOL):
    z1, z2, r, extra = _torus_split(p, variant)
    z1, z2, r, extra = complex(z1), complex(z2), float(r), float(extra)
    if extra > tol or abs(z1) > r * (1 + tol) or abs(z2) > r * (1 + tol):
        raise DomainError("point not in the closed polydisc of radius r")
    if r == 0:
        return AnalyticDisc.constant(np.asarray(p, dtype=np.complex128))
    tail = [] if variant == "X" else [[r, 0]]
    return AnalyticDisc([[z1, 0], [0, r]] + tail, marked=z2 / r)


def _sample_dh(rng, n, variant):
    r = np.ones(n) if variant == "X" else rng.random(n)
    th = np.pi * rng.random(n) * np.where(rng.random(n) < 0.5, 1, -1)
    z2 = r * np.exp(1j * th)
    rad = np.where(z2.imag >= 0, r, 2 * r) * np.sqrt(rng.random(n))
    z1 = rad * _phase(rng, n)
    cols = [z1, z2] if variant == "X" else [z1, z2, r + 0j]
    return np.stack(cols, axis=1)


def sample_polydisc(rng, n, variant="X"):
    """Random points of the open unit bidisc (X) or of {|z1|, |z2| < z3, z3 in (0, 1]} (X')."""
    r = np.ones(n) if variant == "X" else 1 - rng.random(n)
    z1 = r * np.sqrt(rng.random(n)) * _phase(rng, n)
    z2 = r * np.sqrt(rng.random(n)) * _phase(rng, n)
    cols = [z1, z2] if variant == "X" else [z1, z2, r + 0j]
    return np.stack(cols, axis=1)


def torus_generators(variant="X"):
    if variant not in ("X", "X'"):
        raise DomainError("variant must be 'X' or \"X'\"")
    return [
        Generator("torus-stage1", 1, lambda p: _torus_stage1(p, variant),
                  lambda x: torus_x_residual(x, variant), lambda rng, n: _sample_dh(rng, n, variant)),
        Generator("torus-stage2", 2, lambda p: _torus_stage2(p, variant),
                  lambda x: torus_dh_residual(x, variant),
                  lambda rng, n: sample_polydisc(rng, n, variant)),
    ]


def torus_x_samples(m=128, variant="X", levels=17):
    """Grid samples of X (or X') and the sup-norm covering radius of the grid."""
    th = 2 * np.pi * np.arange(m) / m
    half = np.pi * np.arange(m // 2 + 1) / (m // 2)
    rs = [1.0] if variant == "X" else list(np.linspace(0.0, 1.0, levels))
    pts = []
    for r in rs:
        for rad, sgn in ((r, 1), (2 * r, -1)):
            Z1, Z2 = np.meshgrid(rad * np.exp(1j * th), r * np.exp(1j * sgn * half))
            block = [Z1.ravel(), Z2.ravel()]
            if variant != "X":
                block.append(np.full(Z1.size, r + 0j))
            pts.append(np.stack(block, axis=1))
    X = np.concatenate(pts)
    # sup-norm covering radius: half angular gap on the z1 circle (radius <= 2)
    # and on the z2 half circle, plus half the z3 level gap scaled by |z1| <= 2 z3
    h1 = 2 * 2 * math.sin(math.pi / (2 * m))
    h2 = 2 * math.sin(math.pi / (4 * (m // 2)))
    dr = 0.0 if variant == "X" else 0.5 / (levels - 1)
    return X, max(h1, h2) + 2 * dr


def torus_bidisc_hull(variant="X", samples=100, rng=0, seed_m=32):
    """Two-stage hull of the torus example: stage 1 fills the z1 circles, stage 2 the polydisc."""
    gens = torus_generators(variant)
    seed, _ = torus_x_samples(seed_m, variant, levels=5)
    return hull_iterate(seed, gens, 2, samples, rng)


# ---------------------------------------------------------------------------
# maximum principle
# ---------------------------------------------------------------------------


@dataclass
class MaxPrincipleReport:
    passed: bool
    worst_margin: float
    checked: int
    failures: list = field(default_factory=list)


def random_polynomials(rng, nvars, count, degree=4):
    rng = np.random.default_rng(rng)
    exps = [e for e in np.ndindex(*([degree + 1] * nvars)) if sum(e) <= degree]
    out = []
    for _ in range(count):
        c = rng.normal(size=len(exps)) + 1j * rng.normal(size=len(exps))
        out.append(HoloPolynomial(nvars, dict(zip(exps, c))))
    return out


def max_principle_check(cloud, X_samples, polys, eps):
    """Check |P(p)| <= max_X |P| + Lip(P) eps for every cloud point p.

    ``eps`` is the sup-norm covering radius of X_samples; Lip(P) is the
    coefficient bound on the ball containing the samples and the cloud.
    """
    pts = cloud.points if isinstance(cloud, HullCloud) else np.asarray(cloud, dtype=np.complex128)
    X = np.asarray(X_samples, dtype=np.complex128)
    R = float(max(np.abs(X).max(), np.abs(pts).max() if pts.size else 0.0))
    worst = math.inf
    failures = []
    for j, P in enumerate(polys):
        top = float(np.abs(P(X)).max())
        slack = P.lipschitz_bound(R) * eps
        vals = np.abs(P(pts)) if pts.size else np.zeros(0)
        margin = top + slack - vals
        if margin.size:
            worst = min(worst, float(margin.min()))
            for i in np.nonzero(margin < 0)[0]:
                failures.append((int(i), j, float(margin[i])))
    return MaxPrincipleReport(not failures, worst, len(polys) * len(pts), failures)


# ---------------------------------------------------------------------------
# shrinking families under weighted dilation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShrinkFamily:
    base_point: np.ndarray
    t: np.ndarray
    path: tuple
    center_trace: np.ndarray
    residuals: np.ndarray
    epsilon: float
    monotone: bool
    index: int = -1


@dataclass
class SadhReport:
    families: list
    excluded: int
    all_monotone: bool
    max_residual: float
    min_separation: float
    intersections: list
    passed: bool


def orbit_representative(p, alpha):
    """delta_t(p) scaled so that max_i |p_i|^{1/alpha_i} = 1 (t may exceed 1 here)."""
    p = np.asarray(p, dtype=np.complex128)
    a = np.asarray(alpha, dtype=float)
    N = float(np.max(np.abs(p) ** (1 / a)))
    return p / N ** a


def sadh_paths(cloud, alpha, t_mesh=64, targets=None, attach_tol=ATTACH_TOL, sep_tol=1e-9,
               m=BOUNDARY_M):
    """Dilate each cloud point's disc: phi_t = delta_t o phi for t on a mesh of [0, 1].

    ``targets`` maps stage -> residual oracle for that stage's discs (the
    oracle of the set one stage down).  The trace t -> phi_t(zeta*) =
    delta_t(p) must have strictly increasing norm, every phi_t must stay
    attached, and traces of points on different dilation orbits must stay
    apart on the mesh for t > 0.
    """
    alpha = tuple(int(a) for a in alpha)
    t = np.linspace(0.0, 1.0, int(t_mesh))
    pts = cloud.points
    chains = cloud.provenance
    stages = cloud.stage
    fams, excluded = [], 0
    for i, p in enumerate(pts):
        if np.all(p == 0):
            excluded += 1
            continue
        disc = chains[i][0] if chains[i] else AnalyticDisc.constant(p)
        if disc.marked is None:
            excluded += 1
            continue
        path = tuple(disc.dilate(ti, alpha) for ti in t)
        trace = np.array([weighted_dilate(p, ti, alpha) for ti in t])
        via = np.array([d(disc.marked) for d in path])
        if np.max(np.abs(via - trace)) > attach_tol:
            raise NumericError(f"dilated disc misses the dilated point {i}", where=i)
        norms = np.linalg.norm(trace, axis=1)
        mono = bool(np.all(np.diff(norms) > 0))
        if targets is not None and int(stages[i]) in targets:
            oracle = targets[int(stages[i])]
            res = np.array([boundary_residual(d, oracle, m) for d in path])
        else:
            res = np.zeros(t.size)
        fams.append(ShrinkFamily(p, t, path, trace, res, float(res.max()), mono, i))
    if fams:
        traces = np.stack([f.center_trace[1:] for f in fams])
        sep = _kernels.trace_separation(traces)
        reps = [orbit_representative(f.base_point, alpha) for f in fams]
        bad = []
        min_sep = math.inf
        for a in range(len(fams)):
            for b in range(a + 1, len(fams)):
                if np.max(np.abs(reps[a] - reps[b])) <= 1e-9:
                    continue
                min_sep = min(min_sep, float(sep[a, b]))
                if sep[a, b] <= sep_tol:
                    bad.append((a, b, float(sep[a, b])))
    else:
        bad, min_sep = [], math.inf
    mono_all = all(f.monotone for f in fams)
    max_res = max((f.epsilon for f in fams), default=0.0)
    ok = mono_all and max_res <= attach_tol and not bad
    return SadhReport(fams, excluded, mono_all, max_res, min_sep, bad, ok)
