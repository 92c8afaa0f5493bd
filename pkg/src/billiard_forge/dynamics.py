"""Billiard map, its linearisation, and monodromy matrices.

Linear perturbations are expressed in Jacobi coordinates
``(dxi, domega)``: ``dxi`` is the transverse displacement measured to the
left of the velocity and ``domega`` the counter-clockwise change of the
velocity angle. In those coordinates a free flight of length ``tau`` acts
as ``[[1, tau], [0, 1]]`` and a reflection with signed curvature ``kappa``
at incidence angle ``phi`` acts as ``[[-1, 0], [2 kappa / cos(phi), -1]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CornerError, DomainError, GrazingError, ValidationError
from .geometry import GRAZING_TOL, Table, left_normal, ray_intersect

CORNER_TOL = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """Post-collision state: segment index, arclength and reflection angle.

    ``phi`` is measured from the inward normal, positive toward the
    segment's traversal direction.
    """

    segment: int
    s: float
    phi: float

    def __post_init__(self):
        if not abs(self.phi) < math.pi / 2:
            raise DomainError(f"reflection angle {self.phi!r} outside (-pi/2, pi/2)")


@dataclass
class OrbitTrace:
    points: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    flights: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def birkhoff(self, table: Table) -> np.ndarray:
        return np.array([birkhoff(table, p) for p in self.points])


class Hit(NamedTuple):
    point: PhasePoint
    position: np.ndarray
    flight: float
    direction: np.ndarray


def reflect(v, n) -> np.ndarray:
    """Specular reflection of the incoming direction ``v`` off normal ``n``."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    vn = float(v @ n)
    if abs(vn) < 1e-12:
        raise GrazingError("grazing incidence: velocity is tangent to the wall")
    if vn > 0:
        raise DomainError("incoming direction must point against the normal")
    out = v - 2.0 * vn * n
    return out / math.hypot(out[0], out[1])


def position(table: Table, p: PhasePoint) -> np.ndarray:
    return table.segments[p.segment].point_at(p.s)


def outgoing(table: Table, p: PhasePoint) -> np.ndarray:
    t, n = table.segments[p.segment].tangent_normal_at(p.s)
    return math.cos(p.phi) * n + math.sin(p.phi) * t


def birkhoff(table: Table, p: PhasePoint) -> tuple[float, float]:
    return table.cumulative(p.segment, p.s), math.sin(p.phi)


def from_birkhoff(table: Table, S: float, sin_phi: float) -> PhasePoint:
    i, s = table.locate_cumulative(S)
    return PhasePoint(i, s, math.asin(max(-1.0, min(1.0, sin_phi))))


def phase_from_direction(table: Table, segment: int, s: float, v) -> PhasePoint:
    t, n = table.segments[segment].tangent_normal_at(s)
    return PhasePoint(segment, s, math.atan2(float(v @ t), float(v @ n)))


def _is_corner(table: Table, i: int, s: float) -> bool:
    seg = table.segments[i]
    m = len(table.segments)
    if s < CORNER_TOL:
        prev = table.segments[(i - 1) % m]
        t_in, _ = prev.tangent_normal_at(prev.length)
        t_out, _ = seg.tangent_normal_at(0.0)
    elif seg.length - s < CORNER_TOL:
        nxt = table.segments[(i + 1) % m]
        t_in, _ = seg.tangent_normal_at(seg.length)
        t_out, _ = nxt.tangent_normal_at(0.0)
    else:
        return False
    return abs(t_in[0] * t_out[1] - t_in[1] * t_out[0]) > 1e-9 or float(t_in @ t_out) < 0


def shoot(table: Table, origin, d, exclude=None) -> Hit:
    """Fly from ``origin`` along ``d`` and reflect at the next wall."""
    d = np.asarray(d, dtype=float)
    hit = ray_intersect(table, origin, d, exclude)
    if _is_corner(table, hit.segment, hit.s):
        raise CornerError(f"collision at a corner of segment {table.ids[hit.segment]} (s={hit.s!r})",
                          segment=hit.segment, s=hit.s)
    seg = table.segments[hit.segment]
    t, n = seg.tangent_normal_at(hit.s)
    v = reflect(d, n)
    phi = math.atan2(float(v @ t), float(v @ n))
    if abs(abs(phi) - math.pi / 2) < GRAZING_TOL:
        raise GrazingError(f"grazing reflection on segment {table.ids[hit.segment]}")
    pos = seg.point_at(hit.s)
    return Hit(PhasePoint(hit.segment, hit.s, phi), pos, hit.distance, v)


def billiard_step(table: Table, p: PhasePoint) -> PhasePoint:
    """One application of the billiard map."""
    o = position(table, p)
    v = outgoing(table, p)
    return shoot(table, o, v, exclude=(p.segment, p.s)).point


def trace_orbit(table: Table, start: PhasePoint, n: int) -> OrbitTrace:
    """Iterate the billiard map ``n`` times, recording every collision."""
    tr = OrbitTrace([start], [position(table, start)], [])
    p = start
    for _ in range(n):
        o = position(table, p)
        hit = shoot(table, o, outgoing(table, p), exclude=(p.segment, p.s))
        p = hit.point
        tr.points.append(p)
        tr.positions.append(hit.position)
        tr.flights.append(hit.flight)
    return tr


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------


def flight_matrix(tau: float) -> np.ndarray:
    if not tau > 0:
        raise DomainError(f"flight length must be positive, got {tau!r}")
    return np.array([[1.0, tau], [0.0, 1.0]])


def reflection_matrix(kappa: float, phi: float) -> np.ndarray:
    if not abs(phi) < math.pi / 2:
        raise DomainError(f"reflection angle {phi!r} outside (-pi/2, pi/2)")
    return np.array([[-1.0, 0.0], [2.0 * kappa / math.cos(phi), -1.0]])


def arc_closed_form_Lc(N: int, tau_c: float) -> np.ndarray:
    """Closed form of ``N`` arc reflections separated by ``N - 1`` chords."""
    return np.array([[1.0 - 2 * N, (N - 1) * tau_c], [4.0 * N / tau_c, 1.0 - 2 * N]])


def arc_product_Lc(N: int, tau_c: float) -> np.ndarray:
    """``R (T R)^(N-1)`` multiplied out factor by factor."""
    R = np.array([[-1.0, 0.0], [4.0 / tau_c, -1.0]])
    T = flight_matrix(tau_c)
    out = R.copy()
    for _ in range(N - 1):
        out = R @ T @ out
    return out


def _contact_reflection(bp, k0: float) -> np.ndarray:
    # k0 is positive for a dispersing contact, so the signed curvature is -k0
    if bp.eps <= 0:
        if k0 != 0:
            raise DomainError("nonzero contact curvature needs eps > 0")
        return np.array([[-1.0, 0.0], [0.0, -1.0]])
    return np.array([[-1.0, 0.0], [-2.0 * k0 / math.sin(bp.eps / 2), -1.0]])


def monodromy_product(bp, k0: float) -> np.ndarray:
    """Monodromy of the scaffold orbit based after the last arc reflection."""
    S = _contact_reflection(bp, k0)
    T1 = flight_matrix(bp.tau1)
    return arc_closed_form_Lc(bp.N, bp.tau_c) @ T1 @ S @ flight_matrix(bp.tau0) @ S @ T1


def monodromy_factors(bp, k0: float) -> list:
    """The ``2(N + 2)`` Jacobians of one period, in the order they act."""
    S = _contact_reflection(bp, k0)
    R = reflection_matrix(1.0 / bp.r, bp.phi1)
    T1 = flight_matrix(bp.tau1)
    out = [T1, S, flight_matrix(bp.tau0), S, T1, R]
    for _ in range(bp.N - 1):
        out += [flight_matrix(bp.tau_c), R]
    return out


def monodromy_naive(bp, k0: float) -> np.ndarray:
    M = np.eye(2)
    for F in monodromy_factors(bp, k0):
        M = F @ M
    return M


# ---------------------------------------------------------------------------
# Finite-difference monodromy
# ---------------------------------------------------------------------------


def _fly_period(table: Table, origin, d, period: int):
    o = np.asarray(origin, dtype=float)
    d = np.asarray(d, dtype=float)
    exclude = None
    for _ in range(period):
        hit = shoot(table, o, d, exclude)
        o, d = hit.position, hit.direction
        exclude = (hit.point.segment, hit.point.s)
    return o, d


def _transversal_map(table, Q, v, period, x):
    vp = left_normal(v)
    ang = math.atan2(v[1], v[0])
    o = Q + x[0] * vp
    w = np.array([math.cos(ang + x[1]), math.sin(ang + x[1])])
    o2, d2 = _fly_period(table, o, w, period)
    dv = float(d2 @ v)
    if dv <= 0:
        raise ValidationError("perturbed orbit does not return across the transversal")
    t = float((Q - o2) @ v) / dv
    X = o2 + t * d2
    dxi = float((X - Q) @ vp)
    dom = math.atan2(d2[1], d2[0]) - ang
    dom = (dom + math.pi) % (2 * math.pi) - math.pi
    return np.array([dxi, dom])


def _central_jacobian(fn, h):
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, j] = (fn(e) - fn(-e)) / (2 * h)
    return J


def monodromy_fd(table: Table, start: PhasePoint, period: int, h: float = 1e-6,
                 closure_tol: float = 1e-9, return_check: bool = False):
    """Monodromy by central differences in Jacobi coordinates.

    The perturbation is applied on the transversal through the midpoint of
    the first flight and the result is transported back to the
    post-collision state ``start`` so it compares directly with
    :func:`monodromy_product`. With ``return_check`` the Richardson
    estimate at ``h/2`` and the discrepancy between both are returned too.
    """
    P = position(table, start)
    v = outgoing(table, start)
    first = shoot(table, P, v, exclude=(start.segment, start.s))
    a = 0.5 * first.flight
    Q = P + a * v
    zero = _transversal_map(table, Q, v, period, np.zeros(2))
    if np.max(np.abs(zero)) > closure_tol:
        raise ValidationError(f"start is not on a closed orbit of period {period} "
                              f"(closure {np.max(np.abs(zero)):.3e})")
    fn = lambda x: _transversal_map(table, Q, v, period, x)
    J1 = _central_jacobian(fn, h)
    Ta, Tma = np.array([[1.0, a], [0.0, 1.0]]), np.array([[1.0, -a], [0.0, 1.0]])
    M1 = Tma @ J1 @ Ta
    if not return_check:
        return M1
    J2 = _central_jacobian(fn, h / 2)
    M2 = Tma @ J2 @ Ta
    M_rich = (4 * M2 - M1) / 3
    err = float(np.max(np.abs(M1 - M_rich)) / max(np.max(np.abs(M_rich)), 1e-300))
    return M1, M_rich, err


def birkhoff_return_jacobian(table: Table, start: PhasePoint, period: int, h: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of the period map in ``(S, sin phi)``."""
    S0, u0 = birkhoff(table, start)
    per = table.perimeter

    def fn(dx):
        p = from_birkhoff(table, S0 + dx[0], u0 + dx[1])
        for _ in range(period):
            p = billiard_step(table, p)
        S, u = birkhoff(table, p)
        dS = (S - S0 + per / 2) % per - per / 2
        return np.array([dS, u - u0])

    return _central_jacobian(fn, h)


def relative_error(A, B) -> float:
    A, B = np.asarray(A), np.asarray(B)
    return float(np.max(np.abs(A - B)) / max(np.max(np.abs(B)), 1e-300))
