"""Core numerics: holomorphic polynomials, analytic discs, graph surfaces,
fiber sampling, Hausdorff distance and weighted dilations."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DomainError, NumericError, UnsupportedKindError

FIBER_TOL = 1e-10


# ---------------------------------------------------------------------------
# HoloPolynomial
# ---------------------------------------------------------------------------


class HoloPolynomial:
    """Polynomial with complex coefficients in ``nvars`` holomorphic variables.

    Terms are kept in a dict ``{exponent tuple: coefficient}`` with exact
    zeros dropped and keys sorted, so evaluation order (and hence the
    floating point result) depends only on the polynomial itself.
    """

    __slots__ = ("nvars", "_terms", "_exps", "_coeffs")

    def __init__(self, nvars, terms=None):
        self.nvars = int(nvars)
        acc = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != self.nvars or min(e, default=0) < 0:
                raise DomainError(f"bad exponent {e} for {self.nvars} variables")
            acc[e] = acc.get(e, 0j) + complex(c)
        self._terms = {e: c for e, c in sorted(acc.items()) if c != 0}
        if self._terms:
            self._exps = np.array(list(self._terms), dtype=np.int64).reshape(-1, self.nvars)
            self._coeffs = np.array(list(self._terms.values()), dtype=np.complex128)
        else:
            self._exps = np.zeros((0, self.nvars), dtype=np.int64)
            self._coeffs = np.zeros(0, dtype=np.complex128)

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def parse(cls, text, names=("z", "w")):
        """Build from an expression such as ``"z**2*w + 3"`` (sympy syntax)."""
        import sympy

        syms = sympy.symbols(list(names))
        local = {str(s): s for s in syms}
        try:
            expr = sympy.sympify(text.replace("^", "**"), locals=local)
            poly = sympy.Poly(sympy.expand(expr), *syms)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
            raise DomainError(f"cannot parse polynomial {text!r}: {exc}") from None
        terms = {m: complex(c) for m, c in poly.terms()}
        return cls(len(names), terms)

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    @property
    def degree(self):
        if not self._terms:
            return -1
        return int(self._exps.sum(axis=1).max())

    def is_zero(self):
        return not self._terms

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.complex128)
        if self.nvars == 1 and (pts.ndim == 0 or pts.shape[-1:] != (1,)):
            shape = pts.shape
            flat = pts.reshape(-1, 1)
        else:
            if pts.shape[-1] != self.nvars:
                raise DomainError(f"expected trailing dimension {self.nvars}, got {pts.shape}")
            shape = pts.shape[:-1]
            flat = pts.reshape(-1, self.nvars)
        out = _kernels.monomial_eval(self._exps, self._coeffs, flat)
        return out.reshape(shape)

    def _coerce(self, other):
        if isinstance(other, HoloPolynomial):
            if other.nvars != self.nvars:
                raise DomainError("variable count mismatch")
            return other
        return HoloPolynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self._terms)
        for e, c in other._terms.items():
            t[e] = t.get(e, 0j) + c
        return HoloPolynomial(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return HoloPolynomial(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, HoloPolynomial):
            return HoloPolynomial(self.nvars, {e: c * complex(other) for e, c in self._terms.items()})
        other = self._coerce(other)
        t = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0j) + c1 * c2
        return HoloPolynomial(self.nvars, t)

    __rmul__ = __mul__

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise DomainError("only non-negative integer powers")
        out = HoloPolynomial.constant(self.nvars, 1.0)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        return isinstance(other, HoloPolynomial) and self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"HoloPolynomial({self.nvars}, 0)"
        parts = [f"({c.real:.6g}{c.imag:+.6g}j)*{e}" for e, c in list(self._terms.items())[:6]]
        more = " + ..." if len(self._terms) > 6 else ""
        return f"HoloPolynomial({self.nvars}, " + " + ".join(parts) + more + ")"

    def truncate(self, max_degree):
        return HoloPolynomial(self.nvars, {e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    def prune(self, tol):
        """Drop terms with |coefficient| <= tol."""
        return HoloPolynomial(self.nvars, {e: c for e, c in self._terms.items() if abs(c) > tol})

    def abs_coeff_sum(self):
        return float(np.abs(self._coeffs).sum())

    def lipschitz_bound(self, radius):
        """Bound on |P(a) - P(b)| / |a - b| over the ball of the given radius."""
        if not self._terms:
            return 0.0
        deg = self._exps.sum(axis=1)
        dsum = self._exps.sum(axis=1).astype(float)
        mask = deg > 0
        r = max(float(radius), 1e-300)
        return float(np.sum(np.abs(self._coeffs[mask]) * dsum[mask] * r ** (deg[mask] - 1)))

    def restrict(self, surface):
        """Return ``z -> P(z, rho(z))`` for a graph surface with one more variable."""
        if self.nvars != surface.nz + 1:
            raise DomainError("polynomial must have surface.nz + 1 variables")

        def f(z):
            z = np.asarray(z, dtype=np.complex128)
            w = surface.rho(z)
            if surface.nz == 1:
                pts = np.stack([z, w + 0j], axis=-1)
            else:
                pts = np.concatenate([z, (w + 0j)[..., None]], axis=-1)
            return self(pts)

        return f

    def to_json(self):
        return {
            "nvars": self.nvars,
            "terms": [[list(e), c.real, c.imag] for e, c in self._terms.items()],
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["nvars"], {tuple(e): complex(re, im) for e, re, im in d["terms"]})


# ---------------------------------------------------------------------------
# AnalyticDisc
# ---------------------------------------------------------------------------


class AnalyticDisc:
    """Polynomial map of the closed unit disc into C^n.

    ``coeffs[j, k]`` is the coefficient of zeta**k in component j.  ``marked``
    optionally records a parameter zeta* whose image is the point the disc
    was built to pass through.
    """

    DEFAULT_DEGREE = 32

    def __init__(self, coeffs, marked=None):
        c = np.array(coeffs, dtype=np.complex128)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2:
            raise DomainError("coeffs must be (target_dim, degree + 1)")
        c.setflags(write=False)
        self.coeffs = c
        self.marked = None if marked is None else complex(marked)
        if self.marked is not None and abs(self.marked) > 1 + 1e-12:
            raise DomainError(f"marked parameter {self.marked} outside the closed disc")
        self._bcache = {}

    @classmethod
    def constant(cls, point):
        return cls(np.asarray(point, dtype=np.complex128)[:, None], marked=0.0)

    @classmethod
    def from_function(cls, func, target_dim, degree=DEFAULT_DEGREE, marked=None):
        """Truncated Taylor series of a map holomorphic on a neighbourhood of the closed disc."""
        m = 4 * (degree + 1)
        zeta = np.exp(2j * np.pi * np.arange(m) / m)
        vals = np.asarray(func(zeta), dtype=np.complex128).reshape(m, target_dim)
        c = np.fft.fft(vals, axis=0).T / m
        return cls(c[:, : degree + 1], marked=marked)

    @property
    def target_dim(self):
        return self.coeffs.shape[0]

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=np.complex128)
        out = np.zeros(zeta.shape + (self.target_dim,), dtype=np.complex128)
        for k in range(self.degree, -1, -1):
            out = out * zeta[..., None] + self.coeffs[:, k]
        return out

    def boundary_samples(self, m=256):
        """phi(e^{2 pi i j / m}), j = 0..m-1, computed by FFT and cached."""
        m = int(m)
        got = self._bcache.get(m)
        if got is None:
            size = max(m, self.degree + 1)
            pad = np.zeros((self.target_dim, size), dtype=np.complex128)
            pad[:, : self.degree + 1] = self.coeffs
            vals = np.fft.ifft(pad, axis=1) * size
            if size != m:
                # aliasing-free fallback for m <= degree
                vals = self(np.exp(2j * np.pi * np.arange(m) / m)).T
            got = np.ascontiguousarray(vals.T)
            got.setflags(write=False)
            self._bcache[m] = got
        return got

    @property
    def marked_point(self):
        if self.marked is None:
            return None
        return self(self.marked)

    def dilate(self, t, alpha):
        scale = np.asarray(weighted_dilate(np.ones(self.target_dim), t, alpha), dtype=float)
        return AnalyticDisc(self.coeffs * scale[:, None], marked=self.marked)

    def is_constant(self):
        return not np.any(self.coeffs[:, 1:])

    def to_json(self):
        return {
            "coeffs_re": self.coeffs.real.tolist(),
            "coeffs_im": self.coeffs.imag.tolist(),
            "marked": None if self.marked is None else [self.marked.real, self.marked.imag],
        }

    @classmethod
    def from_json(cls, d):
        c = np.array(d["coeffs_re"]) + 1j * np.array(d["coeffs_im"])
        mk = d.get("marked")
        return cls(c, marked=None if mk is None else complex(*mk))

    def __repr__(self):
        return f"AnalyticDisc(dim={self.target_dim}, degree={self.degree}, marked={self.marked})"


# ---------------------------------------------------------------------------
# GraphSurface and the catalog
# ---------------------------------------------------------------------------

ELLIPTIC = "EllipticBishop"
HYPERBOLIC = "HyperbolicBishop"
PARABOLIC = "ParabolicBishop"
SPECIAL = "SpecialElliptic"
LEVIFLAT = "LeviFlatZbarZ"
SIGNATURE = "SignatureQuadric"
FLATEXP = "FlatExpGraph"

KINDS = (ELLIPTIC, HYPERBOLIC, PARABOLIC, SPECIAL, LEVIFLAT, SIGNATURE, FLATEXP)
BISHOP_KINDS = (ELLIPTIC, HYPERBOLIC, PARABOLIC, SPECIAL)

# named real E-terms as {(a, b): c} meaning c z^a zbar^b
ETERMS = {
    "none": {},
    "re-cubic": {(3, 0): 0.5, (0, 3): 0.5},
    "mixed-cubic": {(2, 1): 1.0, (1, 2): 1.0},
    "quartic": {(2, 2): 1.0},
}


def _flat_exp_rho(z):
    x = np.real(z)
    out = np.zeros(np.shape(x))
    pos = x > 0
    with np.errstate(divide="ignore", over="ignore"):
        out[pos] = np.exp(-1.0 / x[pos] ** 2)
    return out


def _flat_exp_fiber(surface, s, mesh):
    # s = exp(-1/x^2) for x > 0, 0 for x <= 0; box |z| <= delta1
    R = surface.delta1
    if s < 0 or s >= 1:
        return np.zeros(0, dtype=np.complex128)
    if s == 0:
        n = max(8, int(math.sqrt(mesh)) * 2)
        g = np.linspace(-R, R, 2 * n + 1)
        X, Y = np.meshgrid(g, g)
        z = (X + 1j * Y).ravel()
        return z[(X.ravel() <= 0) & (np.abs(z) <= R)]
    x0 = 1.0 / math.sqrt(-math.log(s))
    if x0 > R:
        return np.zeros(0, dtype=np.complex128)
    h = math.sqrt(max(R * R - x0 * x0, 0.0))
    return x0 + 1j * np.linspace(-h, h, mesh)


@dataclass(frozen=True)
class GraphSurface:
    """Graph submanifold ``w = rho(z, zbar)`` with a closed box ``|z| <= delta1, |w| <= delta2``.

    ``eterm`` names a higher-order real perturbation from ``ETERMS`` and is
    multiplied by ``eterm_scale``.  ``alpha`` is the weight vector of the
    dilation under which the surface is invariant, when there is one.
    """

    kind: str
    lam: Optional[float] = None
    delta1: float = 1.0
    delta2: float = 1.0
    alpha: Optional[tuple] = None
    eterm: str = "none"
    eterm_scale: float = 0.0
    name: str = ""
    rho_func: Optional[Callable] = field(default=None, compare=False, repr=False)
    fiber_func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown surface kind {self.kind!r}")
        lam = self.lam
        if self.kind == ELLIPTIC and not (lam is not None and 0 <= lam < 0.5):
            raise DomainError("EllipticBishop needs lambda in [0, 1/2)")
        if self.kind == HYPERBOLIC and not (lam is not None and lam > 0.5):
            raise DomainError("HyperbolicBishop needs lambda in (1/2, inf]")
        if self.eterm not in ETERMS:
            raise DomainError(f"unknown E-term {self.eterm!r}")
        if self.eterm != "none" and self.kind not in (ELLIPTIC, HYPERBOLIC):
            raise DomainError("E-terms apply to elliptic/hyperbolic Bishop kinds only")
        if self.delta1 <= 0 or self.delta2 <= 0:
            raise DomainError("box radii must be positive")
        if self.alpha is not None:
            object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))

    @property
    def nz(self):
        return 2 if self.kind in (LEVIFLAT, SIGNATURE) else 1

    @property
    def real_valued(self):
        return self.kind != LEVIFLAT

    @property
    def has_perturbation(self):
        return self.eterm != "none" and self.eterm_scale != 0.0

    @cached_property
    def rho_poly(self):
        """rho as a polynomial in (z_1..z_n, zbar_1..zbar_n), or None for custom kinds."""
        if self.kind == FLATEXP:
            return None
        t = {}
        if self.kind == SPECIAL:
            t[(1, 1)] = 1.0
        elif self.kind in (ELLIPTIC, HYPERBOLIC, PARABOLIC):
            lam = 0.5 if self.kind == PARABOLIC else self.lam
            if math.isinf(lam):
                t[(2, 0)] = 1.0
                t[(0, 2)] = 1.0
            else:
                t[(1, 1)] = 1.0
                t[(2, 0)] = lam
                t[(0, 2)] = lam
            for e, c in ETERMS[self.eterm].items():
                t[e] = t.get(e, 0.0) + self.eterm_scale * c
        elif self.kind == LEVIFLAT:
            t[(0, 1, 1, 0)] = 1.0  # zbar_1 z_2
        elif self.kind == SIGNATURE:
            t[(1, 0, 1, 0)] = 1.0
            t[(0, 1, 0, 1)] = -1.0
        return HoloPolynomial(2 * self.nz, t)

    def _points(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.nz == 1:
            return z, z.shape
        if z.shape[-1] != self.nz:
            raise DomainError(f"expected points with trailing dimension {self.nz}")
        return z, z.shape[:-1]

    def rho(self, z):
        """Graph value at z (no box check); real array unless LeviFlatZbarZ."""
        z, shape = self._points(z)
        if self.rho_func is not None:
            return np.asarray(self.rho_func(z))
        if self.kind == FLATEXP:
            return _flat_exp_rho(z)
        if self.nz == 1:
            pts = np.stack([z, np.conj(z)], axis=-1)
        else:
            pts = np.concatenate([z, np.conj(z)], axis=-1)
        val = self.rho_poly(pts)
        return val.real if self.real_valued else val

    def znorm(self, z):
        z, _ = self._points(z)
        # polydisc norm, so the box |z| <= delta1 is a product of discs
        return np.abs(z) if self.nz == 1 else np.max(np.abs(z), axis=-1)

    def homogeneity_defect(self, z, t):
        """max |rho(delta_t z) - t^{alpha_w} rho(z)| over the given points."""
        if self.alpha is None:
            raise DomainError("surface has no homogeneity weights")
        z, _ = self._points(z)
        az = self.alpha[: self.nz]
        zt = weighted_dilate(z if self.nz > 1 else z[..., None], t, az)
        if self.nz == 1:
            zt = zt[..., 0]
        return float(np.max(np.abs(self.rho(zt) - t ** self.alpha[-1] * self.rho(z))))


def catalog():
    """Catalog of named surfaces with default parameters."""
    return {
        "special-elliptic": GraphSurface(SPECIAL, alpha=(1, 2), name="special-elliptic"),
        "elliptic-bishop": GraphSurface(ELLIPTIC, lam=0.25, alpha=(1, 2), name="elliptic-bishop"),
        "hyperbolic-bishop": GraphSurface(HYPERBOLIC, lam=1.0, alpha=(1, 2), name="hyperbolic-bishop"),
        "hyperbolic-model": GraphSurface(HYPERBOLIC, lam=math.inf, alpha=(1, 2), name="hyperbolic-model"),
        "parabolic-bishop": GraphSurface(PARABOLIC, lam=0.5, alpha=(1, 2), name="parabolic-bishop"),
        "zbar-z": GraphSurface(LEVIFLAT, alpha=(1, 1, 2), name="zbar-z"),
        "signature-quadric": GraphSurface(SIGNATURE, alpha=(1, 1, 2), name="signature-quadric"),
        "flat-exp": GraphSurface(FLATEXP, name="flat-exp", fiber_func=_flat_exp_fiber),
    }


_KIND_ALIASES = {
    "elliptic": ELLIPTIC, "elliptic-bishop": ELLIPTIC, ELLIPTIC.lower(): ELLIPTIC,
    "hyperbolic": HYPERBOLIC, "hyperbolic-bishop": HYPERBOLIC, HYPERBOLIC.lower(): HYPERBOLIC,
    "parabolic": PARABOLIC, "parabolic-bishop": PARABOLIC, PARABOLIC.lower(): PARABOLIC,
    "special-elliptic": SPECIAL, SPECIAL.lower(): SPECIAL,
    "zbar-z": LEVIFLAT, "leviflat": LEVIFLAT, LEVIFLAT.lower(): LEVIFLAT,
    "signature-quadric": SIGNATURE, SIGNATURE.lower(): SIGNATURE,
    "flat-exp": FLATEXP, FLATEXP.lower(): FLATEXP,
}


def surface_from_mapping(cfg):
    """Build a surface from flat key/value settings.

    Recognised keys: ``surface`` (catalog name used as the base), ``kind``,
    ``lambda``, ``delta1``, ``delta2``, ``alpha`` (comma separated),
    ``eterm``, ``eterm_scale``.
    """
    cfg = {str(k).strip().lower(): v for k, v in cfg.items()}
    cat = catalog()
    base = cat.get(str(cfg.get("surface", "")).strip())
    kind = cfg.get("kind")
    if base is None and kind is None:
        raise DomainError("need a catalog 'surface' or a 'kind'")
    if kind is not None:
        key = str(kind).strip().lower()
        if key not in _KIND_ALIASES:
            raise DomainError(f"unknown kind {kind!r}")
        kind = _KIND_ALIASES[key]
        if base is None or base.kind != kind:
            base = next((s for s in cat.values() if s.kind == kind), None)
    kw = dict(kind=base.kind, lam=base.lam, delta1=base.delta1, delta2=base.delta2,
              alpha=base.alpha, eterm=base.eterm, eterm_scale=base.eterm_scale,
              name=base.name, fiber_func=base.fiber_func)
    if "lambda" in cfg:
        kw["lam"] = float(cfg["lambda"])
        if kw["kind"] == ELLIPTIC and kw["lam"] >= 0.5:
            raise DomainError("EllipticBishop needs lambda < 1/2")
    for key in ("delta1", "delta2", "eterm_scale"):
        if key in cfg:
            kw[key] = float(cfg[key])
    if "eterm" in cfg:
        kw["eterm"] = str(cfg["eterm"]).strip()
    if "alpha" in cfg:
        a = str(cfg["alpha"]).strip()
        kw["alpha"] = None if a.lower() in ("", "none") else tuple(int(x) for x in a.split(","))
    elif kw["eterm"] != "none" and kw["eterm_scale"] != 0.0:
        kw["alpha"] = None
    return GraphSurface(**kw)


def parse_kv(text):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_surface(path):
    with open(path) as fh:
        return surface_from_mapping(parse_kv(fh.read()))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def eval_rho(surface, z):
    """rho(z, zbar) with the closed box check ``max |z_j| <= delta1``."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(surface.znorm(z) > surface.delta1):
        raise DomainError(f"point outside |z| <= {surface.delta1}")
    val = surface.rho(z)
    return val[()] if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class Fiber:
    s: float
    points: np.ndarray
    closed: bool
    arc_params: np.ndarray
    mesh: float = 0.0
    residual: float = 0.0

    @property
    def empty(self):
        return self.points.size == 0

    def __len__(self):
        return self.points.shape[0]


def _radial_coeffs(surface, theta):
    """Coefficients p_d(theta) with rho(r e^{i theta}) = sum_d p_d r^d."""
    P = surface.rho_poly
    deg = P.degree
    pc = np.zeros((theta.size, deg + 1))
    for (a, b), c in P.terms.items():
        pc[:, a + b] += (c * np.exp(1j * (a - b) * theta)).real
    return pc


def _angular_coeffs(surface, radii):
    """Fourier data (q, freqs) with rho(r e^{i th}) = Re sum_k q_k(r) e^{i f_k th}."""
    P = surface.rho_poly
    freqs = sorted({a - b for (a, b) in P.terms})
    col = {f: i for i, f in enumerate(freqs)}
    q = np.zeros((radii.size, len(freqs)), dtype=np.complex128)
    for (a, b), c in P.terms.items():
        q[:, col[a - b]] += c * radii ** (a + b)
    return q, np.array(freqs, dtype=float)


def sample_fiber(surface, s, mesh=256, fiber_tol=FIBER_TOL, rmax=None, ngrid=64):
    """Sample the level set K_s = {z : rho(z, zbar) = s, |z| <= rmax} of a one-variable graph.

    Polar marching: for each of ``mesh`` angles the radial equation
    rho(r e^{i theta}) = s is solved for r by bracketed Newton.  Fibers that
    are not closed curves are additionally swept by angular marching on a
    radial grid, which picks up rays and arcs tangent to the angular grid.
    """
    if surface.nz != 1:
        raise DomainError("sample_fiber needs a surface with one complex graph variable")
    if not surface.real_valued:
        raise UnsupportedKindError("fiber sampling needs a real graph")
    s = float(s)
    R = float(surface.delta1 if rmax is None else rmax)
    theta = 2 * np.pi * np.arange(mesh) / mesh - np.pi

    if surface.fiber_func is not None:
        pts = np.asarray(surface.fiber_func(surface if rmax is None else _with_box(surface, R), s, mesh),
                         dtype=np.complex128)
        res = float(np.max(np.abs(surface.rho(pts) - s))) if pts.size else 0.0
        return Fiber(s, pts, False, np.angle(pts), 0.0, res)

    if surface.kind == SPECIAL and surface.eterm == "none":
        if s < 0 or math.sqrt(max(s, 0.0)) > R:
            return Fiber(s, np.zeros(0, dtype=np.complex128), False, np.zeros(0))
        if s == 0:
            return Fiber(s, np.zeros(1, dtype=np.complex128), False, np.zeros(1))
        pts = math.sqrt(s) * np.exp(1j * theta)
        spacing = float(np.max(np.abs(np.diff(np.append(pts, pts[0])))))
        res = float(np.max(np.abs(surface.rho(pts) - s)))
        return Fiber(s, pts, True, theta, spacing, res)

    pc = _radial_coeffs(surface, theta)
    roots, fail = _kernels.radial_roots(pc, s, R, ngrid=ngrid, maxroots=4)
    if fail.any():
        bad = float(theta[np.argmax(fail)])
        raise NumericError(f"radial root finder did not converge at angle {bad:.6f}", where=bad)
    counts = np.sum(np.isfinite(roots), axis=1)
    closed = bool(np.all(counts == 1)) and s > 0

    if closed:
        r = roots[:, 0]
        pts = r * np.exp(1j * theta)
        params = theta
        spacing = float(np.max(np.abs(np.diff(np.append(pts, pts[0])))))
    else:
        ii, jj = np.nonzero(np.isfinite(roots))
        rad_pts = roots[ii, jj] * np.exp(1j * theta[ii])
        radii = R * np.arange(1, mesh + 1) / mesh
        q, freqs = _angular_coeffs(surface, radii)
        aroots, afail = _kernels.angular_roots(q, freqs, s, ntheta=max(64, mesh), maxroots=8)
        if afail.any():
            bad = float(radii[np.argmax(afail)])
            raise NumericError(f"angular root finder did not converge at radius {bad:.6f}", where=bad)
        ai, aj = np.nonzero(np.isfinite(aroots))
        ang_pts = radii[ai] * np.exp(1j * aroots[ai, aj])
        pts = np.concatenate([rad_pts, ang_pts])
        if abs(s) <= fiber_tol and abs(surface.rho(np.zeros(1))[0] - s) <= fiber_tol:
            pts = np.append(pts, 0j)
        order = np.lexsort((np.abs(pts), np.angle(pts)))
        pts = pts[order]
        params = np.angle(pts)
        spacing = 0.0

    res = float(np.max(np.abs(surface.rho(pts) - s))) if pts.size else 0.0
    if res > fiber_tol:
        k = int(np.argmax(np.abs(surface.rho(pts) - s)))
        raise NumericError(f"fiber residual {res:.3e} exceeds tolerance at angle {np.angle(pts[k]):.6f}",
                           where=float(np.angle(pts[k])))
    return Fiber(s, pts, closed, params, spacing, res)


def _with_box(surface, R):
    from dataclasses import replace

    return replace(surface, delta1=R)


def _as_real_points(A):
    A = np.asarray(A)
    if np.iscomplexobj(A) or A.ndim == 1:
        A = np.asarray(A, dtype=np.complex128)
        if A.ndim == 1:
            A = A[:, None]
        return np.concatenate([A.real, A.imag], axis=1)
    return np.asarray(A, dtype=float)


def hausdorff_distance(A, B):
    """Hausdorff distance between two finite point sets (complex or real coordinates)."""
    a = _as_real_points(A)
    b = _as_real_points(B)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise DomainError("Hausdorff distance of an empty set")
    if a.shape[1] != b.shape[1]:
        raise DomainError("point sets live in different dimensions")
    return max(_kernels.directed_hausdorff(a, b), _kernels.directed_hausdorff(b, a))


def weighted_dilate(p, t, alpha):
    """(t^{alpha_1} p_1, ..., t^{alpha_n} p_n)."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError("dilation parameter must lie in [0, 1]")
    alpha = np.asarray(alpha)
    if np.any(alpha <= 0) or np.any(alpha != np.round(alpha)):
        raise DomainError("weights must be positive integers")
    p = np.asarray(p)
    if p.shape[-1] != alpha.size:
        raise DomainError("weight vector and point dimension differ")
    return p * np.array([t ** int(a) for a in alpha])


@dataclass(frozen=True)
class DilationPath:
    base_point: np.ndarray
    alpha: tuple
    t: np.ndarray
    samples: np.ndarray

    def norms(self):
        return np.linalg.norm(self.samples, axis=-1)


def dilation_path(p, alpha, t_mesh=64):
    t = np.linspace(0.0, 1.0, int(t_mesh))
    p = np.asarray(p, dtype=np.complex128)
    samples = np.stack([weighted_dilate(p, ti, alpha) for ti in t])
    return DilationPath(p, tuple(int(a) for a in alpha), t, samples)


def graph_residual(surface, pts):
    """|w - rho(z)| plus box exceedance, per point of C^{n+1}."""
    pts = np.asarray(pts, dtype=np.complex128)
    n = surface.nz
    if pts.shape[-1] != n + 1:
        raise DomainError(f"points must have {n + 1} coordinates")
    z = pts[..., 0] if n == 1 else pts[..., :n]
    w = pts[..., n]
    res = np.abs(w - surface.rho(z))
    res = res + np.maximum(0.0, surface.znorm(z) - surface.delta1)
    res = res + np.maximum(0.0, np.abs(w) - surface.delta2)
    return res


def boundary_residual(disc, target, m=256):
    """Largest distance from a boundary sample of the disc to the target set.

    ``target`` is either a GraphSurface (graph residual plus box violation)
    or a callable mapping an (m, dim) array of points to residuals.
    """
    if m < 16:
        raise DomainError("need at least 16 boundary samples")
    pts = disc.boundary_samples(m)
    if isinstance(target, GraphSurface):
        res = graph_residual(target, pts)
    else:
        res = np.asarray(target(pts), dtype=float)
    return float(np.max(res))


def smooth_step(x, a, b):
    """C-infinity step: 0 for x <= a, 1 for x >= b, built from exp(-1/x) glue."""
    x = np.asarray(x, dtype=float)
    if not b > a:
        raise DomainError("smooth_step needs b > a")
    u = np.clip((x - a) / (b - a), 0.0, 1.0)

    def g(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    num = g(u)
    return num / (num + g(1.0 - u))
