"""Named test functions on graph surfaces, plus literal polynomial parsing."""

import numpy as np

from .errors import DomainError
from .geom import HoloPolynomial, smooth_step


def zbar_cutoff(eps):
    """chi(|z|^2) zbar with chi = 0 on [0, eps] and chi = 1 on [2 eps, inf)."""

    def f(z):
        z = np.asarray(z, dtype=np.complex128)
        return smooth_step(np.abs(z) ** 2, eps, 2 * eps) * np.conj(z)

    return f


_ONE_VAR = {
    "one": lambda z: np.ones_like(np.asarray(z, dtype=np.complex128)),
    "z": lambda z: np.asarray(z, dtype=np.complex128),
    "z3": lambda z: np.asarray(z, dtype=np.complex128) ** 3,
    "zbar": lambda z: np.conj(np.asarray(z, dtype=np.complex128)),
    "zbar-z2": lambda z: np.conj(z) * np.abs(z) ** 2,
}

_TWO_VAR = {
    "one": lambda z: np.ones(np.shape(z)[:-1], dtype=np.complex128),
    "zbar1": lambda z: np.conj(z[..., 0]),
    "zbar2": lambda z: np.conj(z[..., 1]),
}


def variable_names(surface):
    return ("z", "w") if surface.nz == 1 else ("z1", "z2", "w")


def resolve_function(name, surface, eps=None):
    """Return a callable of z for a corpus name or a literal polynomial.

    Literal polynomials are written ``poly:<expr>`` in the variables
    (z, w) or (z1, z2, w) and are restricted to the surface via w = rho(z).
    """
    name = str(name).strip()
    if name.startswith("poly:"):
        P = HoloPolynomial.parse(name[5:], variable_names(surface))
        return P.restrict(surface)
    table = _ONE_VAR if surface.nz == 1 else _TWO_VAR
    if name == "zbar-cutoff" and surface.nz == 1:
        return zbar_cutoff(0.05 if eps is None else eps)
    if name not in table:
        known = sorted(table) + (["zbar-cutoff"] if surface.nz == 1 else [])
        raise DomainError(f"unknown function {name!r}; known: {', '.join(known)} or poly:<expr>")
    return table[name]
