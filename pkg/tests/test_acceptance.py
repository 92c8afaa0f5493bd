"""Acceptance criteria 1-11.

Each test records its outcome through the ``criterion`` fixture; the
terminal summary prints one PASS/FAIL line per criterion. Reference values
are recomputed from the construction; where a published digit disagrees
with the recomputation, a strict ``xfail`` test pins the published value
so the discrepancy stays visible.
"""

import math

import numpy as np
import pytest

from billiard_forge.construction import admissible_tau0, defect, derive_blueprint, eps_max
from billiard_forge.dynamics import arc_closed_form_Lc, arc_product_Lc, monodromy_product
from billiard_forge.errors import ClearanceError
from billiard_forge.gamma import (
    build_table,
    check_clearance,
    curvature_report,
    kappa_star,
    pick_k0,
    rescale_epsilon,
    synthesize,
    tau0_window_convex,
)
from billiard_forge.construction import scaffold_orbit
from billiard_forge.reports import make_bundle, validate_bundle
from billiard_forge.stability import (
    k0_from_r0,
    quadratic_coefficient,
    quadratic_coefficient_lengths,
    trace_closed_form,
    trace_factorizations,
    trace_report,
    window_bounds,
)
from billiard_forge.tablespec import TableSpecError, emit_tablespec, parse_tablespec
from billiard_forge.verification import (
    fit_twist,
    island_probe,
    lift_rotation_number,
    linear_rotation_number,
    monodromy_check,
    rotation_number,
    twist_estimate,
    twist_of_map,
    verify_periodic,
)
from corpus import CORPUS, mutation_corpus

# recomputed reference values for N = 4, r = 1, eps = 0.01, tau0 = 0.5
R1_REF = 0.1165215873
R2_REF = 15.0174188702
K0_REF = 5.291281921e-3
TRACE_REF = -0.366942270549
RHO_REF = 0.27936669


def random_cases(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        N = int(rng.integers(3, 11))
        eps = float(rng.uniform(1e-4, eps_max(N)))
        tau0 = float(rng.uniform(0.05, 0.95)) * admissible_tau0(N, 1.0, eps)[1]
        yield derive_blueprint(N, 1.0, eps, tau0), float(rng.uniform(-20.0, 20.0))


def test_criterion_01_arc_closed_form(criterion):
    with criterion(1, "closed-form arc block matches the factor product"):
        rng = np.random.default_rng(1)
        for N in range(3, 11):
            # chords of the unit circle over the whole tilt range
            for eps in rng.uniform(0.0, eps_max(N), 50):
                tau_c = 2 * math.sin((math.pi - eps) / N)
                P, C = arc_product_Lc(N, tau_c), arc_closed_form_Lc(N, tau_c)
                assert np.max(np.abs(P - C)) < 1e-12
                assert abs(np.linalg.det(P) - 1.0) < 1e-12


def test_criterion_02_trace_consistency(criterion):
    with criterion(2, "two trace factorizations equal the product trace; quadratic coefficient"):
        for bp, R0 in random_cases(1000, 2):
            f1, f2 = trace_factorizations(bp, R0)
            half = 0.5 * np.trace(monodromy_product(bp, k0_from_r0(bp, R0)))
            scale = max(1.0, abs(half))
            assert abs(f1 - f2) < 1e-10 * scale and abs(f1 - half) < 1e-10 * scale
            a = quadratic_coefficient(bp)
            # a quadratic has an exact second difference
            h = [0.5 * np.trace(monodromy_product(bp, k0_from_r0(bp, x))) for x in (-1.0, 0.0, 1.0)]
            second = 0.5 * (h[0] - 2 * h[1] + h[2])
            assert abs(a - second) < 1e-10 * max(1.0, abs(a))
            assert abs(a - quadratic_coefficient_lengths(bp)) < 1e-10 * max(1.0, abs(a))


def test_criterion_03_window_endpoints(bp4, criterion):
    with criterion(3, "trace is +2 at R1, R2 and -2 at R1 + 2/tau0, R2 - 2/tau0"):
        w = window_bounds(bp4)
        assert abs(w.R1 - R1_REF) < 1e-9 and abs(w.R2 - R2_REF) < 1e-9
        cases = [bp4] + [bp for bp, _ in random_cases(100, 3)]
        for bp in cases:
            w = window_bounds(bp)
            for R in (w.R1, w.R2):
                assert abs(2 * trace_closed_form(bp, R) - 2.0) < 1e-9
            for R in (w.R1 + 2 / bp.tau0, w.R2 - 2 / bp.tau0):
                assert abs(2 * trace_closed_form(bp, R) + 2.0) < 1e-9


def test_criterion_04_small_tilt_limits(criterion):
    with criterion(4, "defect and h - tau_c/N scale linearly in eps; exact eps = 0 branch"):
        d, g = [], []
        for eps in (1e-2, 1e-3, 1e-4):
            bp = derive_blueprint(4, 1.0, eps, 0.5)
            assert defect(bp) > 0
            d.append(defect(bp) / eps)
            g.append(abs(bp.h - bp.tau_c / bp.N) / eps)
        assert max(d) / min(d) - 1 < 0.05 and max(g) / min(g) - 1 < 0.05
        for N in range(3, 11):
            bp = derive_blueprint(N, 1.0, 0.0, 0.4 * admissible_tau0(N, 1.0, 0.0)[1])
            assert bp.h == bp.tau_c / N and defect(bp) == 0.0


def _end_to_end(table, bp, gp):
    closure = verify_periodic(table, bp)
    assert closure.ok and closure.closure_error < 1e-9
    mono = monodromy_check(table, bp)
    assert mono["relative_error"] < 1e-5
    rep = trace_report(bp, gp.k0)
    assert rep.classification == "elliptic" and not rep.resonant
    return rep


def test_criterion_05_variant_a(bp4, gamma_a, table_a, criterion):
    with criterion(5, "variant a closes, matches finite differences, elliptic and non-resonant"):
        assert abs(gamma_a.k0 - K0_REF) < 1e-12
        rep = _end_to_end(table_a, bp4, gamma_a)
        assert abs(rep.trace - TRACE_REF) < 1e-4


def test_criterion_06_variant_b(bp4, gamma_b, table_b, criterion):
    with criterion(6, "variant b (dispersing pieces) clears, closes, elliptic"):
        assert all(k < 0 for c in gamma_b.pieces for k in c.profile.kappa)
        assert check_clearance(gamma_b, bp4)["ok"]
        w = window_bounds(bp4)
        R0 = gamma_b.k0 * 2 / math.sin(bp4.eps / 2)
        assert w.window_low[0] < R0 < w.window_low[1]
        _end_to_end(table_b, bp4, gamma_b)


def test_criterion_07_variant_c(bp4c, gamma_c, table_c, criterion):
    with criterion(7, "variant c strictly focusing, elliptic; constant-curvature control fails clearance"):
        lo, hi = tau0_window_convex(4, 1.0, 0.01)
        assert lo < bp4c.tau0 < hi
        assert gamma_c.k0 == kappa_star(bp4c)[1]
        assert np.all(gamma_c.curvature_samples() > 0)
        rep = _end_to_end(table_c, bp4c, gamma_c)
        assert -2 < rep.trace < 2
        control = synthesize(bp4c, "c", taper=False, check=False)
        with pytest.raises(ClearanceError):
            check_clearance(control, bp4c)
        with pytest.raises(ClearanceError):
            scaffold_orbit(bp4c, build_table(control, bp4c))


def test_criterion_08_curvature_bound(bp4c, gamma_c, criterion):
    with criterion(8, "curvature ratio 4N at the window endpoint; rescaling keeps ratio and normal"):
        lo, _ = tau0_window_convex(4, 1.0, 1e-3)
        bp = derive_blueprint(4, 1.0, 1e-3, lo)
        rep = curvature_report(synthesize(bp, "c", require_elliptic=False), bp)
        assert abs(rep.ratio / (4 * bp.N) - 1) < 0.01
        b1 = derive_blueprint(4, 1.0, 1e-3, bp4c.tau0)
        new = rescale_epsilon(gamma_c, bp4c, b1)
        base = curvature_report(gamma_c, bp4c)
        assert curvature_report(new, b1).ratio <= (1 + base.C) * base.ratio
        _, n = new.contact_pose(True)
        assert abs(math.atan2(-n[1], -n[0]) - b1.eps / 2) < 1e-9


@pytest.mark.slow
def test_criterion_09_stability_dichotomy(bp4, table_a, table_flat_contact, criterion):
    with criterion(9, "elliptic island bounded over 1e5 steps; flat contact escapes; rotation number"):
        rep = island_probe(table_a, bp4, delta=1e-4, n=100_000)
        assert rep.bounded and rep.max_deviation < 1e-2
        flat = island_probe(table_flat_contact, bp4, delta=1e-4, n=500, threshold=1e-1)
        assert flat.verdict == "escaped" and flat.escaped_at <= 500
        assert trace_report(bp4, 0.0).trace > 2
        rho = rotation_number(table_a, bp4, delta=1e-5)
        assert abs(rho - RHO_REF) < 1e-3
        assert abs(rho - 0.27939) < 1e-3


def test_criterion_10_twist(bp4, table_a, criterion):
    with criterion(10, "twist fit calibrated on model maps; intercept matches linear rotation"):
        amps = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
        rhos = [lift_rotation_number(lambda z: (z[0] + z[1], z[1]), (0.0, p), 50) for p in amps]
        assert abs(fit_twist(amps, amps, rhos).slope - 1.0) < 1e-6
        th = 2 * math.pi * 0.1234
        c, s = math.cos(th), math.sin(th)
        rigid = twist_of_map(lambda z: (c * z[0] - s * z[1], s * z[0] + c * z[1]), (0.0, 0.0), amps, n=400)
        assert rigid.slope_ci[0] - 1e-12 <= 0.0 <= rigid.slope_ci[1] + 1e-12
        tw = twist_estimate(table_a, bp4)
        assert abs(tw.intercept - linear_rotation_number(table_a, bp4)) < 2e-3
        assert tw.verdict in ("twist nonzero", "inconclusive")
        validate_bundle(make_bundle(twist=tw))


def test_criterion_11_parser_and_schema(bp4, gamma_a, table_a, criterion):
    with criterion(11, "canonical round trip, 100 located mutation errors, schema v1 reports"):
        for path in CORPUS:
            once = emit_tablespec(parse_tablespec(path.read_text()))
            assert emit_tablespec(parse_tablespec(once)) == once
        muts = mutation_corpus()
        assert len(muts) == 100
        for doc, _ in muts:
            with pytest.raises(TableSpecError) as ei:
                parse_tablespec(doc)
            assert ei.value.line >= 1 and ei.value.column >= 1
        probe = island_probe(table_a, bp4, n=60)
        doc = make_bundle(blueprint=bp4, windows=window_bounds(bp4), trace=trace_report(bp4, gamma_a.k0),
                          curvature=curvature_report(gamma_a, bp4), gamma=gamma_a,
                          closure=verify_periodic(table_a, bp4), monodromy=monodromy_check(table_a, bp4),
                          probe=probe, rotation={"measured": 0.2794, "linear": RHO_REF})
        validate_bundle(doc)


# -- published digits that the recomputation does not reproduce ----------------------


@pytest.mark.xfail(strict=True, reason="recomputed trace is -0.366942, 2.9e-4 from the published -0.36723")
def test_published_trace_digits(bp4):
    assert abs(trace_report(bp4, pick_k0(bp4)).trace - (-0.36723)) < 1e-4


@pytest.mark.xfail(strict=True, reason="the window-midpoint contact curvature is 5.29128e-3, twice the published value")
def test_published_contact_curvature(bp4):
    assert abs(pick_k0(bp4) - 2.64564e-3) < 1e-8


@pytest.mark.xfail(strict=True, reason="recomputed R1 is 0.1165216")
def test_published_r1_digits(bp4):
    assert abs(window_bounds(bp4).R1 - 0.116514) < 5e-7


@pytest.mark.xfail(strict=True, reason="recomputed convex-window midpoint is 0.213987")
def test_published_auto_tau0():
    lo, hi = tau0_window_convex(4, 1.0, 0.01)
    assert abs(0.5 * (lo + hi) - 0.21403) < 5e-6
