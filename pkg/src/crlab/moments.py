"""Moment-condition integrals on elliptic graphs and tangential CR residuals."""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedKindError
from .geom import ELLIPTIC, LEVIFLAT, SPECIAL, sample_fiber

MOMENT_TOL = 1e-8


@dataclass(frozen=True)
class MomentReport:
    """Moment integrals ``values[i, k]`` for level parameter ``t_grid[i]`` and order k.

    On w = |z|^2 the entry is the integral over [0, 2pi] of
    f(t e^{i theta}) e^{i(k+1) theta}.  On other elliptic graphs it is the
    contour integral of f z^k dz over the fiber at level s = t^2.
    """

    t_grid: np.ndarray
    k_max: int
    values: np.ndarray
    quad_mesh: int
    form: str = "angular"

    def __post_init__(self):
        if self.values.shape != (len(self.t_grid), self.k_max + 1):
            raise DomainError("values must have shape (len(t_grid), k_max + 1)")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("non-finite moment value")

    def rows(self):
        for i, t in enumerate(self.t_grid):
            for k in range(self.k_max + 1):
                v = self.values[i, k]
                yield float(t), k, float(v.real), float(v.imag), float(abs(v))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "k", "re", "im", "abs"])
        for t, k, re, im, ab in self.rows():
            w.writerow([repr(t), k, repr(re), repr(im), repr(ab)])
        return buf.getvalue()

    def to_json(self):
        return {
            "t_grid": [float(t) for t in self.t_grid],
            "k_max": int(self.k_max),
            "quad_mesh": int(self.quad_mesh),
            "form": self.form,
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_json(cls, d):
        vals = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
        return cls(np.array(d["t_grid"], dtype=float), int(d["k_max"]), vals,
                   int(d["quad_mesh"]), d.get("form", "angular"))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class MomentVerdict:
    passed: bool
    t: float
    k: int
    magnitude: float


def _fft_derivative(z):
    """d z / d theta for samples on a uniform periodic theta grid."""
    m = z.size
    freq = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        freq[m // 2] = 0.0
    return np.fft.ifft(1j * freq * np.fft.fft(z))


def moment_integrals(f, surface, t_grid, k_max=4, mesh=256):
    """Compute the moment table of ``f`` (a function of z) on an elliptic graph."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid <= 0):
        raise DomainError("t_grid must be positive")
    k_max = int(k_max)
    if k_max < 0:
        raise DomainError("k_max must be non-negative")
    theta = 2 * np.pi * np.arange(mesh) / mesh
    ks = np.arange(k_max + 1)
    vals = np.zeros((t_grid.size, k_max + 1), dtype=np.complex128)

    if surface.kind == SPECIAL and not surface.has_perturbation:
        for i, t in enumerate(t_grid):
            if t >= surface.delta1:
                raise DomainError(f"empty fiber at level t={t}")
            fz = np.asarray(f(t * np.exp(1j * theta)), dtype=np.complex128)
            phase = np.exp(1j * np.outer(ks + 1, theta))
            vals[i] = (2 * np.pi / mesh) * (phase @ fz)
        return MomentReport(t_grid, k_max, vals, int(mesh), "angular")

    if surface.kind not in (ELLIPTIC, SPECIAL):
        raise UnsupportedKindError(f"moment integrals need an elliptic graph, got {surface.kind}")
    for i, t in enumerate(t_grid):
        fib = sample_fiber(surface, t * t, mesh=mesh)
        if fib.empty:
            raise DomainError(f"empty fiber at level s={t * t}")
        if not fib.closed:
            raise UnsupportedKindError(f"fiber at level s={t * t} is not a closed curve")
        z = fib.points
        dz = _fft_derivative(z)
        fz = np.asarray(f(z), dtype=np.complex128)
        zk = z[None, :] ** ks[:, None]
        vals[i] = (2 * np.pi / mesh) * (zk @ (fz * dz))
    return MomentReport(t_grid, k_max, vals, int(mesh), "contour")


def moment_verdict(report, tol=MOMENT_TOL):
    """Pass iff every |value| <= tol; the witness is the largest entry."""
    mags = np.abs(report.values)
    i, k = np.unravel_index(int(np.argmax(mags)), mags.shape)
    worst = float(mags[i, k])
    return MomentVerdict(worst <= tol, float(report.t_grid[i]), int(k), worst)


def cr_residual(f, surface, p, h=1e-3):
    """Central-difference value of d f / d zbar_2 at p on w = zbar_1 z_2.

    ``f`` takes an array of points (..., 2) in graph coordinates (z_1, z_2).
    In these coordinates the CR vector field of the graph is d/d zbar_2.
    """
    if surface.kind != LEVIFLAT:
        raise UnsupportedKindError("cr_residual is defined for the zbar-z graph")
    p = np.asarray(p, dtype=np.complex128).ravel()
    if p.size not in (2, 3):
        raise DomainError("p must be (z1, z2) or (z1, z2, w)")
    z1, z2 = p[0], p[1]
    if z2 == 0:
        raise DomainError("p is a CR singular point (z2 = 0)")
    steps = np.array([h, -h, 1j * h, -1j * h])
    pts = np.stack([np.full(4, z1), z2 + steps], axis=-1)
    v = np.asarray(f(pts), dtype=np.complex128)
    dx = (v[0] - v[1]) / (2 * h)
    dy = (v[2] - v[3]) / (2 * h)
    return complex(0.5 * (dx + 1j * dy))
