import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlab import geom
from crlab import graphapprox as G
from crlab.errors import ConditionStarViolated, DomainError
from crlab.geom import HoloPolynomial

CAT = geom.catalog()
HYP = CAT["hyperbolic-model"]
SE = CAT["special-elliptic"]


def cube(z):
    return np.asarray(z, dtype=np.complex128) ** 3


# -- fiber fits ---------------------------------------------------------------


@pytest.mark.parametrize("name,s", [("special-elliptic", 0.1), ("elliptic-bishop", 0.05),
                                    ("hyperbolic-model", 0.2), ("hyperbolic-model", 0.0)])
@pytest.mark.parametrize("degree", [3, 6])
def test_polynomial_is_fitted_exactly(name, s, degree):
    F = geom.sample_fiber(CAT[name], s, mesh=256, rmax=0.5)
    assert G.fiber_polyfit(cube, F, degree).residual < 1e-10


def test_hyperbolic_zbar_fit_improves_with_degree():
    F = geom.sample_fiber(HYP, 0.2, mesh=512, rmax=0.5)
    res = [G.fiber_polyfit(np.conj, F, d).residual for d in (4, 8, 12, 16, 20, 24, 30)]
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-3


@pytest.mark.xfail(strict=True, reason="least squares at degree 12 reaches about 2.6e-2 on this fiber")
def test_hyperbolic_zbar_fit_at_degree_12():
    F = geom.sample_fiber(HYP, 0.2, mesh=512, rmax=0.5)
    assert G.fiber_polyfit(np.conj, F, 12).residual < 1e-3


@pytest.mark.parametrize("t", [0.1, 0.3, 0.5])
def test_zbar_on_circle_plateaus_at_radius(t):
    F = geom.sample_fiber(SE, t * t, mesh=256)
    stalled, res = G.residual_plateau(np.conj, F, 24, 0.05 * t)
    assert stalled
    assert res == pytest.approx(t, rel=1e-6)


def test_fit_degree_reduction_on_ill_conditioned_basis():
    F = geom.sample_fiber(SE, 0.01, mesh=64)
    fit = G.fiber_polyfit(cube, F, 40, center=0j, scale=1.0)
    assert fit.degree < 40 and fit.cond <= G.COND_MAX


def test_fit_rejects_empty_fiber():
    F = geom.sample_fiber(SE, -0.1)
    with pytest.raises(DomainError):
        G.fiber_polyfit(cube, F, 3)


# -- slices -------------------------------------------------------------------


def test_special_elliptic_levels_cluster_at_zero():
    plan = G.select_slices(SE, G.Box(1.0, 1.0), 0.05)
    gaps = np.diff(plan.s_levels)
    assert plan.I[0] == pytest.approx(0.0, abs=1e-6) and plan.I[1] == pytest.approx(1.0)
    assert gaps[0] < gaps[-1] / 10
    # d_H(K_s, K_t) = |sqrt(s) - sqrt(t)| for concentric circles
    assert np.max(np.diff(np.sqrt(plan.s_levels))) < plan.eta


def test_hyperbolic_plan_covers_range():
    box = G.Box(0.5, 0.5)
    plan = G.select_slices(HYP, box, 0.05)
    assert plan.I == pytest.approx((-0.5, 0.5))
    assert plan.s_levels[0] == plan.I[0] and plan.s_levels[-1] == plan.I[1]


def test_flat_exponential_graph_violates_condition_star():
    with pytest.raises(ConditionStarViolated) as info:
        G.select_slices(CAT["flat-exp"], G.Box(1.0, 1.0), 0.05)
    assert abs(info.value.level) < 1e-6
    assert info.value.distance > 0.05


@pytest.mark.parametrize("name", ["special-elliptic", "elliptic-bishop", "hyperbolic-bishop",
                                  "hyperbolic-model", "parabolic-bishop"])
def test_bishop_kinds_pass_the_probe(name):
    plan = G.select_slices(CAT[name], G.Box(0.5, 0.5), 0.05)
    assert plan.s_levels.size >= 2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=2, max_size=8, unique=True))
def test_hats_form_partition_of_unity(levels):
    lv = np.sort(np.array(levels))
    plan = G.SlicePlan(lv, np.zeros_like(lv), (lv[0], lv[-1]), 0.1)
    s = np.linspace(lv[0], lv[-1], 97)
    H = plan.hats(s)
    assert np.all(H >= 0)
    assert np.allclose(H.sum(axis=0), 1.0, atol=1e-15, rtol=0)


# -- partition and lift -------------------------------------------------------


def _plan(levels):
    lv = np.array(levels, dtype=float)
    return G.SlicePlan(lv, np.zeros_like(lv), (lv[0], lv[-1]), 0.1)


def test_assemble_single_level_is_constant():
    a = G.assemble_partition([np.array([1.0, 2.0])], _plan([0.3]))
    assert np.allclose(a(np.array([0.1, 0.3, 0.9])), [[1, 2]] * 3)


def test_assemble_identical_fits_is_constant():
    a = G.assemble_partition([np.array([1.0, -1j])] * 3, _plan([0.0, 0.4, 1.0]))
    assert np.allclose(a(np.linspace(0, 1, 11)), [[1, -1j]] * 11, atol=1e-15)


def test_assemble_ramp():
    a = G.assemble_partition([np.array([0.0]), np.array([1.0])], _plan([0.0, 1.0]))
    s = np.linspace(0, 1, 11)
    assert np.allclose(a(s)[:, 0], s, atol=1e-15)


def test_lift_constant_exact():
    lift = G.weierstrass_lift(lambda s: np.full((np.size(s), 1), 2.5 + 0j), (-1, 1), 1e-12, 0)
    assert lift.met and lift.sup_error < 1e-12
    assert lift.poly.degree == 0
    assert abs(lift.poly.terms[(0, 0)] - 2.5) < 1e-12


def test_lift_abs_value():
    lift = G.weierstrass_lift(lambda s: np.abs(s)[:, None] + 0j, (-1, 1), 0.05, 20)
    assert lift.sup_error < 0.05 and lift.met
    s = np.linspace(-1, 1, 101)
    vals = lift.poly(np.stack([np.zeros_like(s) + 0j, s + 0j], axis=-1))
    assert np.max(np.abs(vals - np.abs(s))) < 0.05


def test_lift_unmet_flag():
    lift = G.weierstrass_lift(lambda s: np.abs(s)[:, None] + 0j, (-1, 1), 1e-6, 4)
    assert not lift.met and lift.sup_error > 1e-6


def test_lift_power_series_matches_chebyshev_on_shifted_interval():
    a = G.assemble_partition([np.array([0.0, 1.0]), np.array([1.0, 0.5]), np.array([0.2, 0.0])],
                             _plan([0.1, 0.4, 0.7]), scale=0.5)
    lift = G.weierstrass_lift(a, (0.1, 0.7), 1.0, 12)
    s = np.linspace(0.1, 0.7, 31)
    z = 0.3 + 0.1j
    direct = a(s) @ np.array([1, z / 0.5])
    via = lift.poly(np.stack([np.full(s.size, z), s + 0j], axis=-1))
    assert np.max(np.abs(direct - via)) <= lift.sup_error * 2 + 1e-12


# -- end to end ---------------------------------------------------------------


def test_restricted_polynomial_reproduced():
    f = HoloPolynomial.parse("z**2 + w + 0.5*z*w").restrict(HYP)
    rep = G.graph_approximate(f, HYP, G.Box(0.5, 0.5), 0.05, verify_n=101)
    assert rep.passed and rep.achieved_sup_error <= 0.05


def test_elliptic_zbar_rejected_with_moment_witness():
    rep = G.graph_approximate(np.conj, SE, G.Box(0.5, 0.25), 0.05, verify_n=51)
    assert rep.stage == "fiber" and not rep.passed
    assert rep.moment_verdict is not None and not rep.moment_verdict.passed
    for s, r in rep.fiber_failures:
        assert r >= 0.5 * np.sqrt(s)


def test_report_is_deterministic_and_serializable():
    f = HoloPolynomial.parse("z**3 - w").restrict(HYP)
    kw = dict(degree_z=6, degree_s=8, verify_n=41)
    a = G.graph_approximate(f, HYP, G.Box(0.4, 0.3), 0.1, **kw)
    b = G.graph_approximate(f, HYP, G.Box(0.4, 0.3), 0.1, **kw)
    assert a.dumps() == b.dumps()
    d = json.loads(a.dumps())
    assert d["stage"] == "done" and d["achieved_sup_error"] == a.achieved_sup_error
    head = a.error_grid_csv().splitlines()[0]
    assert head == "x,y,s,err"


def test_verification_grid_lies_on_graph_box():
    z, s = G.verification_grid(HYP, G.Box(0.5, 0.2), 51)
    assert np.all(np.abs(z) <= 0.5) and np.all(np.abs(s) <= 0.2)
    assert np.allclose(s, HYP.rho(z))


def test_box_parse():
    assert G.Box.parse("0.5,0.25") == G.Box(0.5, 0.25)
    with pytest.raises(DomainError):
        G.Box.parse("0.5")
