import math

import numpy as np
import pytest

from billiard_forge.errors import DomainError
from billiard_forge.geometry import IntrinsicCurve, Table
from billiard_forge.verification import (
    fit_twist,
    island_probe,
    lift_rotation_number,
    linear_rotation_number,
    loop_action,
    loop_area_drift,
    loop_rotation_number,
    monodromy_check,
    rotation_number,
    separation_rate,
    twist_of_map,
    verify_periodic,
)


def shifted(table, dx):
    arc, *pieces = table.segments
    moved = [IntrinsicCurve(c.profile, c.point_at(0.0) + (dx, 0.0), c.heading0) for c in pieces]
    return Table((arc, *moved), ids=table.ids, validate=False)


# -- closure and monodromy ---------------------------------------------------------


@pytest.mark.parametrize("name", ["table_a", "table_b", "table_c"])
def test_orbit_closes(request, name):
    bp = request.getfixturevalue("bp4c" if name == "table_c" else "bp4")
    rep = verify_periodic(request.getfixturevalue(name), bp)
    assert rep.ok and rep.closure_error < 1e-9
    assert len(rep.points) == bp.period + 1
    assert rep.to_dict()["period"] == 6


@pytest.mark.parametrize("dx", [1e-3, -1e-3])
def test_displaced_wall_breaks_closure(table_a, bp4, dx):
    rep = verify_periodic(shifted(table_a, dx), bp4)
    assert not rep.ok and rep.closure_error > 1e-3


def test_monodromy_check_reference(table_a, bp4):
    rep = monodromy_check(table_a, bp4)
    assert abs(rep["k0"] - 5.291281921e-3) < 1e-9
    assert abs(rep["trace"] + 0.366942270549) < 1e-8
    assert rep["relative_error"] < 1e-5 and rep["entrywise_relative_error"] < 1e-5
    assert np.allclose(rep["finite_difference"], rep["analytic"], rtol=1e-5, atol=1e-5)


# -- island probe ----------------------------------------------------------------


def test_zero_perturbation_stays_on_orbit(table_a, bp4):
    rep = island_probe(table_a, bp4, delta=0.0, n=600)
    assert rep.bounded and rep.max_deviation < 1e-9


def test_short_elliptic_probe_bounded(table_a, bp4):
    rep = island_probe(table_a, bp4, delta=1e-4, n=600)
    assert rep.bounded and rep.max_deviation < 1e-2
    assert len(rep.per_trajectory) == 8 and len(rep.trajectory) == 100
    assert rep.to_dict()["verdict"] == "bounded"


def test_flat_contact_escapes(table_flat_contact, bp4):
    rep = island_probe(table_flat_contact, bp4, delta=1e-4, n=500, threshold=1e-1)
    assert rep.verdict == "escaped"
    assert rep.escaped_at <= 500 and rep.max_deviation > 1e-1


def test_probe_default_threshold_escape(table_flat_contact, bp4):
    rep = island_probe(table_flat_contact, bp4, delta=1e-4, n=500)
    assert rep.verdict == "escaped" and rep.threshold == pytest.approx(1e-2)


def test_probe_workers_match_serial(table_a, bp4):
    a = island_probe(table_a, bp4, delta=1e-4, n=120, workers=1)
    b = island_probe(table_a, bp4, delta=1e-4, n=120, workers=2)
    assert a.to_dict() == b.to_dict()


@pytest.mark.parametrize("kw", [{"delta": -1e-5}, {"delta": 2e-3}, {"n_traj": 4}])
def test_probe_argument_checks(table_a, bp4, kw):
    with pytest.raises(DomainError):
        island_probe(table_a, bp4, n=6, **kw)


# -- rotation numbers ----------------------------------------------------------------


def test_rotation_number_converges(table_a, bp4):
    lin = linear_rotation_number(table_a, bp4)
    assert abs(lin - 0.27936669) < 1e-8
    e1 = abs(rotation_number(table_a, bp4, 1e-5) - lin)
    e2 = abs(rotation_number(table_a, bp4, 5e-6) - lin)
    assert e1 < 1e-3 and e2 < e1 / 1.8


def test_rotation_number_needs_elliptic(table_flat_contact, bp4):
    with pytest.raises(DomainError):
        rotation_number(table_flat_contact, bp4)


def test_loop_helpers_on_rotation():
    th = 2 * math.pi * 0.1234
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    pts = np.array([np.linalg.matrix_power(R, k) @ (0.5, 0.0) for k in range(500)])
    assert abs(loop_rotation_number(pts) - 0.1234) < 1e-12
    assert abs(loop_action(pts) - 0.125) < 1e-4
    # clockwise rotation folds to the same value
    assert abs(loop_rotation_number(pts[:, ::-1]) - 0.1234) < 1e-12


def test_lift_rotation_number():
    assert abs(lift_rotation_number(lambda z: (z[0] + 0.3, z[1]), (0.0, 0.0), 100) - 0.3) < 1e-12


# -- twist ---------------------------------------------------------------------------


def test_twist_calibration_lift_map():
    amps = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    rhos = [lift_rotation_number(lambda z: (z[0] + z[1], z[1]), (0.0, p), 50) for p in amps]
    rep = fit_twist(amps, amps, rhos)
    assert abs(rep.slope - 1.0) < 1e-6 and rep.verdict == "twist nonzero"


def test_twist_calibration_rigid_rotation():
    th = 2 * math.pi * 0.1234
    c, s = math.cos(th), math.sin(th)
    rep = twist_of_map(lambda z: (c * z[0] - s * z[1], s * z[0] + c * z[1]), (0.0, 0.0),
                       (0.1, 0.2, 0.3, 0.4, 0.5), n=400)
    assert rep.slope_ci[0] - 1e-12 <= 0.0 <= rep.slope_ci[1] + 1e-12
    assert abs(rep.slope) < 1e-9 and rep.verdict == "inconclusive"
    assert rep.note == "numerical evidence, not a proof"


def test_twist_fit_needs_five_points():
    with pytest.raises(DomainError):
        fit_twist([1, 2, 3, 4], [1, 2, 3, 4], [1, 2, 3, 4])


# -- hyperbolic growth and area ---------------------------------------------------


def test_separation_rate_matches_eigenvalue(table_flat_contact, bp4):
    rep = separation_rate(table_flat_contact, bp4)
    assert abs(rep["measured"] / rep["expected"] - 1) < 0.1
    assert rep["steps"] <= 50


def test_separation_rate_needs_hyperbolic(table_a, bp4):
    with pytest.raises(DomainError):
        separation_rate(table_a, bp4)


def test_loop_area_preserved(table_a, bp4):
    rep = loop_area_drift(table_a, bp4, delta=1e-4, periods=1000)
    assert rep["first"] > 0 and rep["relative_change"] < 0.01
