import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from billiard_forge.errors import CornerError, DomainError, GeometryError, GrazingError, ValidationError
from billiard_forge.geometry import (
    ArcSegment,
    CurvatureProfile,
    IntrinsicCurve,
    LineSegment,
    Table,
    circle_table,
    curvature_at,
    curve_from_curvature,
    folded_flower,
    point_at,
    ray_intersect,
    tangent_normal_at,
)


def unit_arc():
    return ArcSegment((0.0, 0.0), 1.0, 0.0, 2 * math.pi, True)


# -- point_at ---------------------------------------------------------------


def test_quarter_circle_point():
    assert np.allclose(point_at(unit_arc(), math.pi / 2), (0.0, 1.0), atol=1e-15)


def test_line_midpoint():
    assert np.allclose(point_at(LineSegment((0, 0), (2, 0)), 1.0), (1.0, 0.0))


def test_flat_intrinsic_curve_is_straight():
    c = IntrinsicCurve(CurvatureProfile.constant(0.0, 5.0), (0.0, 0.0), 0.0)
    assert np.allclose(c.point_at(3.0), (3.0, 0.0), atol=1e-14)


@pytest.mark.parametrize("seg", [unit_arc(), LineSegment((0, 0), (1, 1)),
                                 IntrinsicCurve(CurvatureProfile.constant(0.5, 1.0), (0, 0), 0.0)])
def test_out_of_range_arclength(seg):
    with pytest.raises(DomainError):
        seg.point_at(seg.length + 1e-3)
    with pytest.raises(DomainError):
        seg.point_at(-1e-3)


# -- tangent and normal -----------------------------------------------------


def test_circle_frame_at_start():
    t, n = tangent_normal_at(unit_arc(), 0.0)
    assert np.allclose(t, (0, 1)) and np.allclose(n, (-1, 0))


def test_vertical_line_frame():
    t, n = tangent_normal_at(LineSegment((0, 0), (0, 2)), 1.0)
    assert np.allclose(t, (0, 1)) and np.allclose(n, (-1, 0))


def test_tilted_flat_curve_tangent():
    c = IntrinsicCurve(CurvatureProfile.constant(0.0, 1.0), (0, 0), math.pi / 4)
    t, n = c.tangent_normal_at(0.5)
    assert np.allclose(t, (math.sqrt(0.5), math.sqrt(0.5)), atol=1e-15)
    assert abs(t @ n) < 1e-15


# -- curvature ----------------------------------------------------------------


def test_curvature_conventions():
    assert curvature_at(unit_arc(), 1.0) == 1.0
    assert ArcSegment((0, 0), 2.0, 1.0, 0.5, False).curvature_at(0.1) == -0.5
    assert curvature_at(LineSegment((0, 0), (1, 0)), 0.3) == 0.0


def test_two_knot_profile_midpoint():
    p = CurvatureProfile((0.0, 1.0), (0.002, 0.004))
    assert abs(float(p(0.5)) - 0.003) < 1e-15


def test_corner_reports_one_sided_values():
    tb = folded_flower(4)
    with pytest.raises(CornerError) as ei:
        tb.curvature_at_boundary(tb.segments[0].length)
    assert ei.value.one_sided == (1.0, 0.0)


@pytest.mark.parametrize("knots", [((0.0, 1.0, 1.0), (0, 0, 0)), ((0.0, 2.0, 1.0), (0, 0, 0)),
                                   ((0.1, 1.0), (0, 0)), ((0.0,), (0,)), ((0.0, 1.0), (0, math.nan))])
def test_bad_profiles_rejected(knots):
    with pytest.raises(ValidationError):
        CurvatureProfile(*knots)


# -- arclength parametrization and curvature consistency --------------------


def _segments():
    prof = CurvatureProfile((0.0, 0.3, 0.7, 1.2), (0.5, -1.0, 2.0, 0.1))
    return [unit_arc(), ArcSegment((1, 2), 0.5, 3.0, 1.0, False), LineSegment((0, 0), (3, -1)),
            IntrinsicCurve(prof, (0.2, 0.1), 0.7)]


@pytest.mark.parametrize("seg", _segments())
def test_unit_speed_and_turning_rate(seg):
    rng = np.random.default_rng(1)
    h = 1e-6
    for s in rng.uniform(2 * h, seg.length - 2 * h, 100):
        v = (seg.point_at(s + h) - seg.point_at(s - h)) / (2 * h)
        assert abs(math.hypot(*v) - 1.0) < 1e-9
        t1, _ = seg.tangent_normal_at(s - h)
        t2, _ = seg.tangent_normal_at(s + h)
        rate = math.atan2(t1[0] * t2[1] - t1[1] * t2[0], t1 @ t2) / (2 * h)
        assert abs(rate - seg.curvature_at(s)) < 1e-6


# -- curve reconstruction ---------------------------------------------------


def test_unit_circle_from_constant_curvature():
    c = curve_from_curvature(CurvatureProfile.constant(1.0, 2 * math.pi), (1.0, 0.0), math.pi / 2)
    assert np.hypot(*(c.point_at(c.length) - (1.0, 0.0))) < 1e-10
    pts = c.samples()
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0)) < 1e-9


def test_straight_segment_length():
    c = curve_from_curvature(CurvatureProfile.constant(0.0, 2.5), (1.0, 1.0), 0.3)
    assert abs(np.hypot(*(c.point_at(2.5) - (1.0, 1.0))) - 2.5) < 1e-13


def test_halving_cells_changes_endpoint_negligibly():
    prof = CurvatureProfile((0.0, 0.4, 1.0, 2.0), (0.0, 3.0, -2.0, 1.0))
    a = IntrinsicCurve(prof, (0, 0), 0.0, cells=2048)
    b = IntrinsicCurve(prof, (0, 0), 0.0, cells=4096)
    assert np.hypot(*(a.point_at(2.0) - b.point_at(2.0))) < 1e-10 * 2.0


def test_contact_circle_chord():
    eps, tau0 = 0.01, 0.21
    rho = tau0 / (2 * math.sin(eps / 2))
    length = rho * eps
    # start at the lower contact with the tangent tilted by -eps/2 from vertical
    c = curve_from_curvature(CurvatureProfile.constant(1.0 / rho, length), (0.0, -tau0 / 2),
                             math.pi / 2 - eps / 2)
    end = c.point_at(length)
    assert abs(end[1] - tau0 / 2) < 1e-12 and abs(end[0]) < 1e-12
    t, _ = c.tangent_normal_at(length)
    assert abs(math.atan2(t[1], t[0]) - (math.pi / 2 + eps / 2)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(k=st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), L=st.floats(0.1, 2.0), h=st.floats(-3, 3))
def test_constant_profile_is_circular_arc(k, L, h):
    c = IntrinsicCurve(CurvatureProfile.constant(k, L), (0.0, 0.0), h)
    center = np.array([-math.sin(h), math.cos(h)]) / k
    d = np.hypot(*(c.samples() - center).T)
    assert np.max(np.abs(d - 1.0 / abs(k))) < 1e-9


# -- ray intersection -------------------------------------------------------


def test_ray_from_center_of_unit_circle():
    hit = ray_intersect(circle_table(), (0.0, 0.0), np.array([1.0, 0.0]))
    assert abs(hit.distance - 1.0) < 1e-15


def test_non_unit_direction_rejected():
    with pytest.raises(DomainError):
        ray_intersect(circle_table(), (0, 0), np.array([2.0, 0.0]))


def test_tangent_ray_grazes():
    tb = Table((ArcSegment((0, 0), 1.0, -1.0, 4.0, True), LineSegment((math.cos(4), math.sin(4)),
                                                                     (math.cos(-1), math.sin(-1)))))
    with pytest.raises(GrazingError):
        ray_intersect(tb, (-1.0, -0.5), np.array([0.0, 1.0]))


def test_ray_outside_table_misses():
    tb = Table((LineSegment((0, 0), (1, 0)), LineSegment((1, 0), (0, 1)), LineSegment((0, 1), (0, 0))))
    with pytest.raises(GeometryError):
        ray_intersect(tb, (5.0, 5.0), np.array([1.0, 0.0]))


def test_first_flight_to_contact(bp4, table_a):
    o = bp4.P1
    d = bp4.gamma0_point - o
    d = d / np.hypot(*d)
    hit = ray_intersect(table_a, o, d, exclude=table_a.locate(o)[:2])
    assert abs(hit.distance - bp4.tau1) < 1e-9


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-0.6, 0.6), y=st.floats(-0.5, 0.5))
def test_every_direction_hits_folded_flower(x, y):
    tb = folded_flower(4)
    for a in np.linspace(0, 2 * math.pi, 360, endpoint=False):
        d = np.array([math.cos(a), math.sin(a)])
        assert ray_intersect(tb, (x, y), d).distance > 0


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0, 2 * math.pi), r=st.floats(0.0, 0.9))
def test_circle_hits_are_on_the_circle(a, r):
    o = np.array([r * 0.5, -r * 0.3])
    d = np.array([math.cos(a), math.sin(a)])
    hit = ray_intersect(circle_table(), o, d)
    p = o + hit.distance * d
    assert abs(math.hypot(*p) - 1.0) < 1e-12


def test_curve_intersection_matches_sampling():
    prof = CurvatureProfile((0.0, 1.0, 2.0), (0.5, -0.5, 0.2))
    c = IntrinsicCurve(prof, (0.0, 0.0), 0.2)
    s_true = 1.3
    p = c.point_at(s_true)
    o = p + np.array([0.3, -1.0])
    d = (p - o) / np.hypot(*(p - o))
    hits = c.intersect_ray(o, d, 1e-9)
    assert any(abs(s - s_true) < 1e-10 for _, s in hits)


# -- tables -----------------------------------------------------------------


def test_open_chain_rejected():
    with pytest.raises(ValidationError):
        Table((LineSegment((0, 0), (1, 0)), LineSegment((1, 0), (0, 1))))


def test_clockwise_table_rejected():
    with pytest.raises(ValidationError):
        Table((LineSegment((0, 0), (0, 1)), LineSegment((0, 1), (1, 0)), LineSegment((1, 0), (0, 0))))


def test_duplicate_ids_rejected():
    with pytest.raises(ValidationError):
        Table((LineSegment((0, 0), (1, 0)), LineSegment((1, 0), (0, 1)), LineSegment((0, 1), (0, 0))),
              ids=("a", "b", "a"))


def test_arc_full_turn_limit():
    with pytest.raises(ValidationError):
        ArcSegment((0, 0), 1.0, 0.0, 7.0)


def test_synthesized_tables_closed(table_a, table_b, table_c):
    for tb in (table_a, table_b, table_c):
        assert tb.closure_gap() < 1e-9
        assert tb.signed_area() > 0


def test_folded_flower_endpoints():
    for N in (3, 4, 6):
        tb = folded_flower(N)
        c = math.cos(math.pi / N)
        assert np.allclose(tb.segments[1].a, (c, -math.sin(math.pi / N)), atol=1e-15)
        assert tb.closure_gap() < 1e-12


def test_locate_roundtrip(table_c):
    for i, seg in enumerate(table_c.segments):
        s = 0.37 * seg.length
        j, s2, dist = table_c.locate(seg.point_at(s))
        assert j == i and abs(s2 - s) < 1e-9 and dist < 1e-12
