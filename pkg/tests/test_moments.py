import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlab import geom
from crlab.errors import DomainError, UnsupportedKindError
from crlab.functions import resolve_function, zbar_cutoff
from crlab.geom import HoloPolynomial
from crlab.moments import MomentReport, cr_residual, moment_integrals, moment_verdict

CAT = geom.catalog()
SE = CAT["special-elliptic"]
EB = CAT["elliptic-bishop"]
LF = CAT["zbar-z"]
TS = (0.1, 0.2, 0.4)


def test_constant_has_vanishing_moments():
    rep = moment_integrals(lambda z: np.ones_like(z), SE, TS, k_max=4)
    assert rep.values.shape == (3, 5)
    assert np.max(np.abs(rep.values)) < 1e-14


def test_zbar_first_moment_is_two_pi_t():
    rep = moment_integrals(np.conj, SE, TS, k_max=3, mesh=256)
    assert np.allclose(rep.values[:, 0], 2 * np.pi * np.array(TS), atol=1e-12, rtol=0)
    assert np.max(np.abs(rep.values[:, 1:])) < 1e-14


def test_restricted_polynomial_passes():
    f = HoloPolynomial.parse("z**2*w + 3").restrict(SE)
    rep = moment_integrals(f, SE, TS, k_max=6)
    assert np.max(np.abs(rep.values)) < 1e-10


def test_verdict_examples():
    zero = MomentReport(np.array([0.1]), 2, np.zeros((1, 3), dtype=complex), 64, "angular")
    v = moment_verdict(zero)
    assert v.passed and v.magnitude == 0
    v = moment_verdict(moment_integrals(np.conj, SE, TS), tol=1e-8)
    assert not v.passed
    assert (v.t, v.k) == (0.4, 0)
    assert v.magnitude == pytest.approx(2 * np.pi * 0.4, abs=1e-12)


def test_cutoff_passes_small_levels_and_fails_large():
    eps = 0.05
    f = zbar_cutoff(eps)
    small = [0.05, 0.1, 0.2]
    assert all(t < math.sqrt(eps) for t in small)
    assert moment_verdict(moment_integrals(f, SE, small)).passed
    assert not moment_verdict(moment_integrals(f, SE, small + [math.sqrt(2 * eps) + 0.01])).passed


@pytest.mark.parametrize("name", ["zbar", "zbar-z2", "z3"])
def test_mesh_doubling_stability(name):
    f = resolve_function(name, SE)
    a = moment_integrals(f, SE, TS, mesh=128).values
    b = moment_integrals(f, SE, TS, mesh=256).values
    assert np.max(np.abs(a - b)) < 1e-10


def test_elliptic_bishop_contour_route():
    f = HoloPolynomial.parse("z**3 + 2*w*z - 1").restrict(EB)
    rep = moment_integrals(f, EB, (0.1, 0.3), k_max=3)
    assert rep.form == "contour"
    assert moment_verdict(rep, tol=1e-9).passed
    a = moment_integrals(np.conj, EB, (0.1, 0.3), mesh=128).values
    b = moment_integrals(np.conj, EB, (0.1, 0.3), mesh=256).values
    assert np.max(np.abs(a - b)) < 1e-10


def test_contour_route_matches_green_oracle():
    # the contour integral of zbar dz is 2i times the enclosed area, and the
    # fiber x^2 (1 + 2 lam) + y^2 (1 - 2 lam) = s is an ellipse of area pi s / sqrt(1 - 4 lam^2)
    lam = EB.lam
    ts = np.array([0.1, 0.3])
    area = np.pi * ts ** 2 / math.sqrt(1 - 4 * lam * lam)
    vals = moment_integrals(np.conj, EB, ts, k_max=0).values[:, 0]
    assert np.allclose(vals, 2j * area, atol=1e-12, rtol=0)


@settings(max_examples=25, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_linearity(a, b):
    f = resolve_function("zbar-z2", SE)
    g = resolve_function("zbar", SE)
    ma = moment_integrals(f, SE, TS).values
    mb = moment_integrals(g, SE, TS).values
    mab = moment_integrals(lambda z: a * f(z) + b * g(z), SE, TS).values
    assert np.allclose(mab, a * ma + b * mb, atol=1e-12 * (1 + abs(a) + abs(b)), rtol=0)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2),
                          st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)),
                min_size=1, max_size=5))
def test_every_restricted_polynomial_passes(terms):
    P = HoloPolynomial(2, {(a, b): c for a, b, c in terms})
    rep = moment_integrals(P.restrict(SE), SE, TS, k_max=4)
    assert moment_verdict(rep, tol=1e-9).passed


def test_errors():
    with pytest.raises(DomainError):
        moment_integrals(np.conj, SE, [1.5])
    with pytest.raises(DomainError):
        moment_integrals(np.conj, SE, [0.0])
    with pytest.raises(UnsupportedKindError):
        moment_integrals(np.conj, CAT["hyperbolic-model"], [0.1])


def test_report_serialization():
    rep = moment_integrals(np.conj, SE, TS, k_max=1)
    csv = rep.to_csv().splitlines()
    assert csv[0] == "t,k,re,im,abs"
    assert len(csv) == 1 + 6
    back = MomentReport.from_json(json.loads(rep.dumps()))
    assert np.array_equal(back.values, rep.values)


# -- CR residual ------------------------------------------------------------


def test_cr_residual_examples():
    p = (1, 1)
    zb1 = resolve_function("zbar1", LF)
    zb2 = resolve_function("zbar2", LF)
    assert abs(cr_residual(zb1, LF, p)) < 1e-12
    assert cr_residual(zb2, LF, p) == pytest.approx(1.0, abs=1e-10)
    f = HoloPolynomial.parse("z1 + w", ("z1", "z2", "w")).restrict(LF)
    assert abs(cr_residual(f, LF, (0.3 + 0.2j, -0.5j))) < 1e-10


def test_cr_residual_second_order():
    # z2 enters cubically through w^2 z2, so the truncation term is visible
    f = HoloPolynomial.parse("z1**2*w + z2*w**2 + 3*z1*z2", ("z1", "z2", "w")).restrict(LF)
    rng = np.random.default_rng(4)
    for _ in range(5):
        p = rng.uniform(0.2, 0.8, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        r1 = abs(cr_residual(f, LF, p, h=1e-2))
        r2 = abs(cr_residual(f, LF, p, h=1e-3))
        assert r1 <= 10 * 1e-4
        assert math.log10(r1 / r2) >= 1.9


def test_cr_residual_singular_point():
    with pytest.raises(DomainError):
        cr_residual(resolve_function("zbar1", LF), LF, (0.5, 0))
    with pytest.raises(UnsupportedKindError):
        cr_residual(np.conj, SE, (0.5, 0.5))
