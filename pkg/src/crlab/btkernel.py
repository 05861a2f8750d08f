"""Gaussian convolution operator on w = |z|^2 and its polynomial form.

The operator is

    Q_n f(z) = c_n * integral of chi(|zeta|) f(zeta) exp(-n |z - zeta|^2) dA(zeta)

with c_n = n / pi, so that Q_n is an approximate identity as n grows.
Expanding exp(-n|z - zeta|^2) = e^{-n z zbar} e^{-n |zeta|^2} e^{n z conj(zeta)} e^{n zbar zeta}
gives

    Q_n(z) = c_n e^{-n z zbar} sum_{b, g} n^{b+g} z^b zbar^g M[b, g] / (b! g!)

where M[b, g] = integral of chi f conj(zeta)^b zeta^g e^{-n |zeta|^2} dA.  When f
satisfies the moment condition, M[b, g] = 0 for g > b, so z^b zbar^g =
z^{b-g} (z zbar)^g and Q_n is a power series in (z, w) with w = z zbar.
"""

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import DomainError, MomentConditionViolated
from .geom import HoloPolynomial, smooth_step

DEFAULT_EPS = 0.5
DEFAULT_NS = (16, 64, 256)
DEFAULT_DEGREE = 8
DROP_TOL = 1e-10


def chi(r, eps=DEFAULT_EPS):
    """Smooth radial cutoff: 1 on [0, eps/2], 0 on [eps, inf)."""
    return 1.0 - smooth_step(r, eps / 2, eps)


def kernel_constant(n):
    """c_n = n / pi, the reciprocal of the mass of exp(-n |zeta|^2)."""
    return n / math.pi


def gaussian_mass(scale):
    """Integral over C of exp(-|zeta|^2 / scale) by adaptive quadrature (closed form: pi * scale)."""
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * math.exp(-r * r / scale), 0.0, math.inf,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _polar_mesh(eps, quad_mesh):
    nr, nt = (int(x) for x in quad_mesh)
    xg, wg = np.polynomial.legendre.leggauss(nr)
    r = eps / 2 * (xg + 1)
    wr = eps / 2 * wg
    th = 2 * np.pi * np.arange(nt) / nt
    Z = r[:, None] * np.exp(1j * th[None, :])
    dA = (wr * r)[:, None] * (2 * np.pi / nt) * np.ones((1, nt))
    return Z, dA


@dataclass(frozen=True)
class GaussianMomentTable:
    n: float
    beta_max: int
    eps: float
    M: np.ndarray
    quad_mesh: tuple
    undersampled: bool = False

    @property
    def cn(self):
        return kernel_constant(self.n)

    def upper_max(self):
        """Largest |M[b, g]| with g > b."""
        if self.beta_max == 0:
            return 0.0
        return float(np.abs(np.triu(self.M, 1)).max())

    def to_json(self):
        return {
            "n": self.n, "beta_max": self.beta_max, "eps": self.eps,
            "quad_mesh": list(self.quad_mesh), "undersampled": self.undersampled,
            "M_re": self.M.real.tolist(), "M_im": self.M.imag.tolist(),
        }

    @classmethod
    def from_json(cls, d):
        M = np.array(d["M_re"]) + 1j * np.array(d["M_im"])
        return cls(d["n"], d["beta_max"], d["eps"], M, tuple(d["quad_mesh"]), d["undersampled"])

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def gaussian_moments(f, n, epsilon=DEFAULT_EPS, beta_max=40, quad_mesh=(400, 256)):
    """Moment table M[b, g] by Gauss-Legendre (radial) x trapezoid (angular) quadrature."""
    if n <= 0 or epsilon <= 0:
        raise DomainError("n and epsilon must be positive")
    beta_max = int(beta_max)
    nr, nt = (int(x) for x in quad_mesh)
    Z, dA = _polar_mesh(epsilon, quad_mesh)
    R = np.abs(Z)
    W = (dA * chi(R, epsilon) * np.exp(-n * R * R) * np.asarray(f(Z), dtype=np.complex128)).ravel()
    z = Z.ravel()
    Pb = np.empty((beta_max + 1, z.size), dtype=np.complex128)
    Pg = np.empty_like(Pb)
    Pb[0] = 1.0
    Pg[0] = 1.0
    for k in range(1, beta_max + 1):
        Pb[k] = Pb[k - 1] * np.conj(z)
        Pg[k] = Pg[k - 1] * z
    M = (Pb * W) @ Pg.T
    # trapezoid resolves angular frequencies below nt; radial GL needs nodes for the powers
    undersampled = 2 * beta_max + 8 >= nt or beta_max + 8 >= nr
    if undersampled:
        warnings.warn(f"beta_max={beta_max} is undersampled by quad_mesh={quad_mesh}", RuntimeWarning)
    return GaussianMomentTable(float(n), beta_max, float(epsilon), M, (nr, nt), bool(undersampled))


def _log_scale(n, b, g):
    return (b + g) * math.log(n) - math.lgamma(b + 1) - math.lgamma(g + 1)


def bt_polynomial(table, degree=DEFAULT_DEGREE, drop_tol=DROP_TOL):
    """Truncate Q_n to a holomorphic polynomial in (z, w).

    Terms are kept when b + g + 2 j <= degree, where j indexes the series
    of e^{-n w}; this is the total degree in (z, zbar).  Entries with g > b
    are measured as |c_n n^{b+g} M[b,g] / (b! g!)| (eps/2)^{b+g}, the size of
    the term on the disc where the approximation is used, and must stay
    below ``drop_tol``.
    """
    degree = int(degree)
    if degree > 2 * table.beta_max:
        raise DomainError("degree exceeds 2 * beta_max")
    n = table.n
    cn = table.cn
    rho = table.eps / 2
    terms = {}
    for b in range(table.beta_max + 1):
        for g in range(table.beta_max + 1):
            if b + g > degree:
                continue
            m = table.M[b, g]
            if m == 0:
                continue
            base = cn * m * math.exp(_log_scale(n, b, g))
            if g > b:
                mag = abs(base) * rho ** (b + g)
                if mag > drop_tol:
                    raise MomentConditionViolated(
                        f"moment entry ({b}, {g}) has size {mag:.3e} > {drop_tol:g}", b, g, mag)
                continue
            j = 0
            while b + g + 2 * j <= degree:
                c = base * (-n) ** j / math.factorial(j)
                key = (b - g, g + j)
                terms[key] = terms.get(key, 0j) + c
                j += 1
    return HoloPolynomial(2, terms)


def bt_apply(f, n, z_point, epsilon=DEFAULT_EPS, quad_mesh=(600, 512)):
    """Q_n f at the given points by direct quadrature of the defining integral."""
    Z, dA = _polar_mesh(epsilon, quad_mesh)
    W = (dA * chi(np.abs(Z), epsilon) * np.asarray(f(Z), dtype=np.complex128)).ravel()
    zs = np.asarray(z_point, dtype=np.complex128)
    out = kernel_constant(n) * _kernels.gauss_conv(Z.ravel(), W, zs.ravel(), n)
    out = out.reshape(zs.shape)
    return complex(out) if out.ndim == 0 else out


def eval_on_graph(P, z):
    """Evaluate a polynomial in (z, w) at (z, |z|^2)."""
    z = np.asarray(z, dtype=np.complex128)
    return P(np.stack([z, np.abs(z) ** 2 + 0j], axis=-1))


def probe_disc(radius, nr=8, nt=32):
    """Polar grid on |z| <= radius (origin included) for sup-error probes."""
    r = radius * np.arange(1, nr + 1) / nr
    th = 2 * np.pi * np.arange(nt) / nt
    return np.concatenate([[0j], (r[:, None] * np.exp(1j * th[None, :])).ravel()])


@dataclass(frozen=True)
class ConvergenceRow:
    n: float
    sup_error: float
    two_route: float
    upper_max: float


def bt_convergence(f, ns=DEFAULT_NS, epsilon=DEFAULT_EPS, degree=40, beta_max=40,
                   quad_mesh=(400, 256), probe=None):
    """Sup error of Q_n against f on |z| <= eps/4 and the two-route gap, for each n."""
    zs = probe_disc(epsilon / 4) if probe is None else np.asarray(probe, dtype=np.complex128)
    fz = np.asarray(f(zs), dtype=np.complex128)
    rows = []
    for n in ns:
        direct = bt_apply(f, n, zs, epsilon)
        table = gaussian_moments(f, n, epsilon, beta_max, quad_mesh)
        P = bt_polynomial(table, degree)
        poly = eval_on_graph(P, zs)
        rows.append(ConvergenceRow(float(n), float(np.max(np.abs(direct - fz))),
                                   float(np.max(np.abs(direct - poly))), table.upper_max()))
    return rows
