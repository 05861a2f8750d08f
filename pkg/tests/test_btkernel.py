import math

import numpy as np
import pytest
from scipy import integrate

from crlab import btkernel as B
from crlab.errors import DomainError, MomentConditionViolated
from crlab.geom import HoloPolynomial

EPS = 0.5


def one(z):
    return np.ones_like(np.asarray(z, dtype=np.complex128))


def ident(z):
    return np.asarray(z, dtype=np.complex128)


def zw(z):
    z = np.asarray(z, dtype=np.complex128)
    return z * np.abs(z) ** 2


def zero(z):
    return np.zeros_like(np.asarray(z, dtype=np.complex128))


def radial_oracle(n, power=0):
    """integral of chi(r) r^power exp(-n r^2) over the plane, by adaptive 1-D quadrature."""
    val, _ = integrate.quad(lambda r: B.chi(r, EPS) * r ** power * math.exp(-n * r * r) * 2 * math.pi * r,
                            0.0, EPS, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def test_chi_shape():
    r = np.array([0.0, 0.2, 0.25, 0.4, 0.5, 0.7])
    c = B.chi(r, EPS)
    assert c[0] == 1 and c[1] == 1 and c[2] == 1 and 0 < c[3] < 1 and c[4] == 0 and c[5] == 0


def test_zero_function_table():
    T = B.gaussian_moments(zero, 64, EPS, beta_max=6)
    assert np.all(T.M == 0)
    assert B.bt_polynomial(T, 8).is_zero


@pytest.mark.parametrize("n", [16, 64, 256])
def test_constant_moment_matches_radial_oracle(n):
    T = B.gaussian_moments(one, n, EPS, beta_max=4)
    assert abs(T.M[0, 0] - radial_oracle(n)) < 1e-10


def test_identity_selection_rule():
    T = B.gaussian_moments(ident, 64, EPS, beta_max=10)
    b, g = np.indices(T.M.shape)
    off = g != b - 1
    assert np.max(np.abs(T.M[off])) < 1e-10
    assert np.max(np.abs(T.M[~off])) > 1e-6


def test_moment_table_crude_bound():
    n = 64
    T = B.gaussian_moments(zw, n, EPS, beta_max=6)
    sup_f = (EPS) ** 3
    for b in range(7):
        for g in range(7):
            assert abs(T.M[b, g]) <= sup_f * radial_oracle(n, b + g) * (1 + 1e-9) + 1e-15


def test_undersampled_flag():
    with pytest.warns(RuntimeWarning):
        T = B.gaussian_moments(one, 16, EPS, beta_max=40, quad_mesh=(40, 64))
    assert T.undersampled


def test_kernel_normalisation():
    for n in (16, 64, 256):
        # mass of exp(-|zeta|^2 / n) is n pi
        assert abs(B.gaussian_mass(n) - n * math.pi) <= 1e-10 * n * math.pi
        # the operator kernel exp(-n |zeta|^2) has mass 1 / c_n
        assert abs(B.gaussian_mass(1.0 / n) - 1.0 / B.kernel_constant(n)) < 1e-12


def test_constant_polynomial_at_origin():
    T = B.gaussian_moments(one, 256, EPS, beta_max=10)
    P = B.bt_polynomial(T, 4)
    assert abs(P(np.array([[0j, 0j]]))[0] - 1) < 0.05


def test_identity_polynomial_close_on_small_disc():
    T = B.gaussian_moments(ident, 256, EPS, beta_max=10)
    P = B.bt_polynomial(T, 8)
    zs = B.probe_disc(EPS / 4)
    assert np.max(np.abs(B.eval_on_graph(P, zs) - zs)) < 0.05


def test_bt_apply_examples():
    assert B.bt_apply(zero, 64, 0.1 + 0j, EPS) == 0
    T = B.gaussian_moments(one, 64, EPS, beta_max=4)
    assert abs(B.bt_apply(one, 64, 0j, EPS) - T.cn * T.M[0, 0]) < 1e-10
    z = EPS / 8
    assert abs(B.bt_apply(ident, 256, z, EPS) - z) < 0.05


@pytest.mark.parametrize("expr", ["1", "z", "z*w", "z**3 - 2*w + 0.5j", "w**2 + z**2*w"])
def test_two_route_consistency(expr):
    P = HoloPolynomial.parse(expr)

    def f(z):
        return B.eval_on_graph(P, z)

    rng = np.random.default_rng(9)
    zs = EPS / 4 * np.sqrt(rng.uniform(0, 1, 12)) * np.exp(2j * np.pi * rng.uniform(0, 1, 12))
    n = 64
    T = B.gaussian_moments(f, n, EPS, beta_max=40)
    Q = B.bt_polynomial(T, 40)
    assert np.max(np.abs(B.bt_apply(f, n, zs, EPS) - B.eval_on_graph(Q, zs))) < 1e-6


def test_violation_raises():
    T = B.gaussian_moments(np.conj, 64, EPS, beta_max=6)
    with pytest.raises(MomentConditionViolated) as info:
        B.bt_polynomial(T, 6)
    assert info.value.gamma > info.value.beta


def test_degree_cap():
    T = B.gaussian_moments(one, 16, EPS, beta_max=3)
    with pytest.raises(DomainError):
        B.bt_polynomial(T, 8)
    P = B.bt_polynomial(T, 6)
    assert all(e[0] + 2 * e[1] <= 6 for e in P.terms)


def test_table_json_roundtrip():
    T = B.gaussian_moments(ident, 16, EPS, beta_max=3)
    U = B.GaussianMomentTable.from_json(T.to_json())
    assert np.array_equal(T.M, U.M) and U.n == T.n
