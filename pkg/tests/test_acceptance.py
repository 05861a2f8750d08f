"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from crlab import btkernel as B
from crlab import geom
from crlab import graphapprox as G
from crlab import hulls as H
from crlab.errors import ConditionStarViolated
from crlab.geom import HoloPolynomial, boundary_residual
from crlab.moments import cr_residual, moment_integrals

CAT = geom.catalog()


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


def test_criterion_1_moment_counterexample(report):
    S = CAT["special-elliptic"]
    ts = np.array([0.1, 0.2, 0.4])
    zb = moment_integrals(np.conj, S, ts, k_max=4, mesh=256)
    gap = float(np.max(np.abs(zb.values[:, 0] - 2 * np.pi * ts)))
    poly = HoloPolynomial.parse("z**2*w + 3").restrict(S)
    pv = moment_integrals(poly, S, ts, k_max=4, mesh=256)
    top = float(np.max(np.abs(pv.values)))
    ok = gap < 1e-8 and top < 1e-10
    report(1, ok, f"zbar k=0 moment vs 2 pi t gap {gap:.2e} (< 1e-8); z^2 w + 3 max |moment| {top:.2e} (< 1e-10)")
    assert ok


def test_criterion_2_gaussian_operator(report):
    eps = 0.5
    corpus = {
        "1": lambda z: np.ones_like(np.asarray(z, dtype=np.complex128)),
        "zeta": lambda z: np.asarray(z, dtype=np.complex128),
        "zeta|zeta|^2": lambda z: np.asarray(z, dtype=np.complex128) * np.abs(z) ** 2,
    }
    ok = True
    parts = []
    for name, f in corpus.items():
        rows = B.bt_convergence(f, (16, 64, 256), eps)
        errs = [r.sup_error for r in rows]
        two = max(r.two_route for r in rows)
        mono = errs[0] >= errs[1] >= errs[2]
        ok &= mono and errs[2] < 0.05 and two < 1e-6
        parts.append(f"{name}: " + "/".join(f"{e:.1e}" for e in errs) + f" two-route {two:.1e}")
    mass = max(abs(B.gaussian_mass(n) - n * math.pi) for n in (16, 64, 256))
    ok &= mass < 1e-10
    report(2, ok, "; ".join(parts) + f"; |1/c_n - n pi| {mass:.1e}")
    assert ok


def test_criterion_3_disc_constructions(report):
    rng = np.random.default_rng(2024)
    consts = H.TarConstants.derive(4.0, 0.04)
    gens = H.tar_generators(consts) + H.anote_generators()
    worst_res, worst_thr, failures = 0.0, 0.0, 0
    for g in gens:
        for p in g.sample(rng, 1000):
            try:
                d = g.build(p)
            except Exception:
                failures += 1
                continue
            worst_res = max(worst_res, boundary_residual(d, g.target, 256))
            worst_thr = max(worst_thr, float(np.max(np.abs(d(d.marked) - p))))
    prof = H.step2_boundary_profile(256)
    in_range = (np.max(np.abs(prof.imag)) <= 1e-12 and prof.real.min() >= 1 / 9 - 1e-12
                and prof.real.max() <= 1 + 1e-12)
    ok = failures == 0 and worst_res < 1e-8 and worst_thr < 1e-8 and in_range
    report(3, ok, f"{len(gens)} generators x 1000 points, {failures} build failures, max boundary residual "
                  f"{worst_res:.1e}, max point-through {worst_thr:.1e}; profile in [1/9, 1]: {in_range}")
    assert ok


def test_criterion_4_iterated_hull(report):
    gens = H.torus_generators("X")
    pts = H.sample_polydisc(np.random.default_rng(7), 100)
    certified = sum(H.certify(p, gens, 2) is not None for p in pts)
    probe_free = H.certify((0.3, 0.4), gens, 1) is None
    cloud = H.torus_bidisc_hull("X", 100, 11)
    X, h = H.torus_x_samples(256)
    polys = H.random_polynomials(13, 2, 50, degree=4)
    mp = [H.max_principle_check(cloud.subset(s), X, polys, h) for s in (1, 2)]
    ok = certified == 100 and probe_free and all(r.passed for r in mp)
    report(4, ok, f"stage-2 certificates {certified}/100; (0.3, 0.4) without stage-1 certificate: {probe_free}; "
                  f"max principle margins {mp[0].worst_margin:.3g} / {mp[1].worst_margin:.3g}")
    assert ok


def test_criterion_5_shrinking_families(report):
    C = 4.0
    consts = H.TarConstants.derive(C, 0.04)
    rng = np.random.default_rng(5)
    cloud = H.hull_iterate(H.sample_a0(rng, 50, C), H.tar_generators(consts), 2, 100, rng)
    targets = {0: lambda x: H.a0_residual(x, C), 1: lambda x: H.a0_residual(x, C),
               2: lambda x: H.a1_residual(x, C)}
    rep = H.sadh_paths(cloud, (1, 1, 2), 64, targets)
    ok = rep.all_monotone and rep.max_residual <= 1e-8 and not rep.intersections and rep.passed
    report(5, ok, f"{len(rep.families)} families, strictly increasing traces: {rep.all_monotone}, "
                  f"max residual {rep.max_residual:.1e}, min separation {rep.min_separation:.3g}, "
                  f"crossings {len(rep.intersections)}")
    assert ok


def test_criterion_6_graph_approximation(report):
    box = G.Box(0.5, 0.5)
    t0 = time.perf_counter()
    rep = G.graph_approximate(np.conj, CAT["hyperbolic-model"], box, 0.05)
    runtime = time.perf_counter() - t0
    neg = G.graph_approximate(np.conj, CAT["special-elliptic"], box, 0.05)
    plateau = bool(neg.fiber_failures) and all(r >= 0.5 * math.sqrt(s) for s, r in neg.fiber_failures)
    ok = rep.achieved_sup_error <= 0.25 and runtime < 60 and neg.stage == "fiber" and plateau
    ratio = min((r / math.sqrt(s) for s, r in neg.fiber_failures), default=float("nan"))
    report(6, ok, f"hyperbolic sup error {rep.achieved_sup_error:.4f} (<= 0.25) in {runtime:.1f} s; "
                  f"elliptic rejected at stage '{neg.stage}' on {len(neg.fiber_failures)} fibers, "
                  f"min plateau/t {ratio:.3f} (>= 0.5)")
    assert ok


def test_criterion_7_condition_star(report):
    try:
        G.select_slices(CAT["flat-exp"], G.Box(1.0, 1.0), 0.05)
        flagged, where = False, None
    except ConditionStarViolated as exc:
        flagged, where = True, exc.level
    box = G.Box(0.5, 0.5)
    bishop = [k for k, S in CAT.items() if S.kind in geom.BISHOP_KINDS]
    passing = []
    for k in bishop:
        try:
            G.select_slices(CAT[k], box, 0.05)
            passing.append(k)
        except ConditionStarViolated:
            pass
    ok = flagged and len(passing) == len(bishop)
    report(7, ok, f"flat graph flagged: {flagged} (level {where}); Bishop kinds passing probe "
                  f"{len(passing)}/{len(bishop)}")
    assert ok


def test_criterion_8_cr_residual(report):
    S = CAT["zbar-z"]
    rng = np.random.default_rng(8)
    pts = rng.uniform(0.2, 0.9, (6, 2)) * np.exp(2j * np.pi * rng.uniform(0, 1, (6, 2)))
    funcs = {"zbar1": lambda z: np.conj(z[..., 0])}
    for i, P in enumerate(H.random_polynomials(9, 3, 10, degree=4)):
        funcs[f"poly{i}"] = P.restrict(S)
    # central differences are exact for functions of degree <= 2 in z2; those
    # residuals sit at roundoff and satisfy <= C h^2 with no measurable order
    floor = 1e-10
    orders, exact, ok = [], 0, True
    for name, f in funcs.items():
        for p in pts:
            r1 = abs(cr_residual(f, S, p, 1e-2))
            r2 = abs(cr_residual(f, S, p, 1e-3))
            if r1 <= floor and r2 <= floor:
                exact += 1
                continue
            order = math.log10(r1 / r2)
            orders.append(order)
            ok &= order >= 1.9
    zb2 = [abs(cr_residual(lambda z: np.conj(z[..., 1]), S, p, h) - 1) for p in pts for h in (1e-2, 1e-3)]
    ok &= max(zb2) < 1e-10 and len(orders) > 0
    report(8, ok, f"min observed order {min(orders):.3f} over {len(orders)} cases (>= 1.9), {exact} exact at "
                  f"roundoff; zbar2 residual within {max(zb2):.1e} of 1")
    assert ok
