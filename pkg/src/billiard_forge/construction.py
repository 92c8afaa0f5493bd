"""Scaffold of the special periodic orbit near the folded flower table.

The base circle of radius ``r`` is centred at the origin and the cut chord
is the vertical line ``x = r cos(pi/N)``. Tilting the two halves of the
vertical bouncing segment by ``eps`` produces an orbit that reflects ``N``
times off the circular arc and twice off a new wall component near the
chord, at the mirror-symmetric contact points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import OrbitTrace, PhasePoint, birkhoff, outgoing, phase_from_direction, position, shoot
from .errors import ClearanceError, DomainError, ValidationError
from .geometry import Table

EPS_TINY = 1e-12


def eps_max(N: int, r: float = 1.0) -> float:
    """Largest tilt accepted by :func:`derive_blueprint`.

    Keeps ``alpha1 < pi/2``, ``phi1 > 0`` and the strip width below ``r/10``,
    and never exceeds ``0.2 / N``.
    """
    if N < 3:
        raise DomainError("N must be at least 3")
    cap = 0.2 / N
    # alpha1 < pi/2
    cap = min(cap, (math.pi / 2 - math.pi / N) * N / (N - 1))
    # phi1 = pi/2 - pi/N + eps/N is positive for every eps >= 0 when N >= 3
    # strip width r sin(alpha1) tan(eps) < r/10, with sin(alpha1) <= 1
    cap = min(cap, math.atan(0.1))
    return cap


@dataclass(frozen=True)
class OrbitBlueprint:
    """Every scalar of the scaffold orbit plus the two contact poses."""

    N: int
    r: float
    eps: float
    tau0: float
    alpha1: float
    phi1: float
    phi0: float
    tau_c: float
    tau1: float
    H: float
    h: float
    Delta: float
    gamma0: tuple  # (x, y, nx, ny), inward normal
    gamma0_mirror: tuple
    arc_points: tuple
    tau_c_leading: float
    h_leading: float

    @property
    def chord_x(self) -> float:
        return self.r * math.cos(math.pi / self.N)

    @property
    def gamma0_point(self) -> np.ndarray:
        return np.array(self.gamma0[:2])

    @property
    def gamma0_normal(self) -> np.ndarray:
        return np.array(self.gamma0[2:])

    @property
    def P1(self) -> np.ndarray:
        return np.array(self.arc_points[0])

    @property
    def period(self) -> int:
        return self.N + 2

    def to_dict(self) -> dict:
        x, y, nx, ny = self.gamma0
        return {
            "N": self.N, "r": self.r, "eps": self.eps, "tau0": self.tau0,
            "alpha1": self.alpha1, "phi1": self.phi1, "phi0": self.phi0,
            "tau_c": self.tau_c, "tau1": self.tau1, "H": self.H, "h": self.h,
            "Delta": self.Delta,
            "gamma0": {"x": x, "y": y, "nx": nx, "ny": ny},
        }


def admissible_tau0(N: int, r: float, eps: float) -> tuple[float, float]:
    """Open interval of admissible vertical free paths."""
    alpha1 = math.pi / N + (N - 1) / N * eps
    return 0.0, 2.0 * r * math.sin(alpha1)


def _check_inputs(N, r, eps):
    if not isinstance(N, (int, np.integer)) or N < 3:
        raise DomainError(f"N must be an integer >= 3, got {N!r}")
    if not (r > 0 and math.isfinite(r)):
        raise DomainError(f"r must be positive, got {r!r}")
    if not math.isfinite(eps) or eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps!r}")
    if eps > eps_max(N, r):
        raise DomainError(f"eps = {eps!r} exceeds eps_max({N}) = {eps_max(N, r)!r}")


def derive_blueprint(N: int, r: float, eps: float, tau0: float) -> OrbitBlueprint:
    """Evaluate every closed form of the scaffold orbit.

    ``eps = 0`` is accepted and yields the unbroken vertical bouncing
    segment of the folded flower table.
    """
    _check_inputs(N, r, eps)
    lo, hi = admissible_tau0(N, r, eps)
    if not (lo < tau0 < hi):
        raise DomainError(f"tau0 = {tau0!r} outside admissible range ({lo!r}, {hi!r})")
    N = int(N)
    alpha1 = math.pi / N + (N - 1) / N * eps
    phi1 = math.pi / 2 - (math.pi / N - eps / N)
    tau_c = 2.0 * r * math.sin(math.pi / N - eps / N)
    Delta = r * math.sin(alpha1) * math.tan(eps)
    if eps < EPS_TINY:
        h = tau_c / N
    else:
        h = 2.0 * r * math.sin(alpha1) - 2.0 * r * (math.cos(math.pi / N) - math.cos(alpha1)) / math.tan(eps)
    phi0 = math.pi / 2 - eps / 2
    tau1 = (2.0 * r * math.sin(alpha1) - tau0) / (2.0 * math.cos(eps))
    H = 2.0 * r * math.sin(math.pi / N)
    P1 = np.array([r * math.cos(alpha1), r * math.sin(alpha1)])
    d = np.array([math.sin(eps), -math.cos(eps)])
    g = P1 + tau1 * d
    # the contact height is tau0/2 by construction; pin it exactly
    gx, gy = float(g[0]), tau0 / 2
    nx, ny = -math.cos(eps / 2), -math.sin(eps / 2)
    arc = orbit_arc_points(N, r, alpha1, phi1)
    return OrbitBlueprint(
        N=N, r=float(r), eps=float(eps), tau0=float(tau0), alpha1=alpha1, phi1=phi1, phi0=phi0,
        tau_c=tau_c, tau1=tau1, H=H, h=h, Delta=Delta,
        gamma0=(gx, gy, nx, ny), gamma0_mirror=(gx, -gy, nx, -ny),
        arc_points=arc, tau_c_leading=H, h_leading=H / N,
    )


def orbit_arc_points(N: int, r: float, alpha1: float, phi1: float) -> tuple:
    """The ``N`` arc collisions, counter-clockwise from polar angle ``alpha1``."""
    step = math.pi - 2.0 * phi1
    out = []
    for k in range(N):
        a = alpha1 + k * step
        out.append((r * math.cos(a), r * math.sin(a)))
    # the last point is the mirror of the first; make that exact
    out[-1] = (out[0][0], -out[0][1])
    return tuple(out)


def defect(bp: OrbitBlueprint) -> float:
    """``2 tau1 + tau0 - tau_c`` in a cancellation-free form."""
    r, eps, a1 = bp.r, bp.eps, bp.alpha1
    return ((1.0 / math.cos(eps) - 1.0) * (2.0 * r * math.sin(a1) - bp.tau0)
            + 2.0 * r * (math.sin(a1) - math.sin(a1 - eps)))


def defect_naive(bp: OrbitBlueprint) -> float:
    return 2.0 * bp.tau1 + bp.tau0 - bp.tau_c


def orbit_points(bp: OrbitBlueprint) -> list:
    """Collision points of one period, starting at the upper contact.

    Order: upper contact, ``N`` arc points counter-clockwise, lower contact.
    """
    g = (bp.gamma0[0], bp.gamma0[1])
    gm = (bp.gamma0_mirror[0], bp.gamma0_mirror[1])
    return [g, *bp.arc_points, gm]


def orbit_edges(bp: OrbitBlueprint) -> list:
    """Edges of the closed orbit polygon as pairs of points."""
    pts = [np.array(p) for p in orbit_points(bp)]
    return [(pts[k], pts[(k + 1) % len(pts)]) for k in range(len(pts))]


def start_phase(bp: OrbitBlueprint, table: Table) -> PhasePoint:
    """Post-collision state at the upper contact, heading for the arc."""
    i, s, dist = table.locate(bp.gamma0_point)
    v = np.array([-math.sin(bp.eps), math.cos(bp.eps)])
    return phase_from_direction(table, i, s, v)


def arc_start_phase(bp: OrbitBlueprint, table: Table) -> PhasePoint:
    """Post-collision state at the first arc collision."""
    i, s, _ = table.locate(bp.P1)
    p2 = np.array(bp.arc_points[1])
    v = p2 - bp.P1
    v = v / np.hypot(*v)
    return phase_from_direction(table, i, s, v)


def last_arc_phase(bp: OrbitBlueprint, table: Table) -> PhasePoint:
    """Post-collision state at the last arc collision, the monodromy base point."""
    i, s, _ = table.locate(np.array(bp.arc_points[-1]))
    v = np.array(bp.gamma0_mirror[:2]) - np.array(bp.arc_points[-1])
    v = v / np.hypot(*v)
    return phase_from_direction(table, i, s, v)


def closure_error(table: Table, a: PhasePoint, b: PhasePoint) -> float:
    Sa, ua = birkhoff(table, a)
    Sb, ub = birkhoff(table, b)
    per = table.perimeter
    dS = (Sb - Sa + per / 2) % per - per / 2
    return max(abs(dS), abs(ub - ua))


def scaffold_orbit(bp: OrbitBlueprint, table: Table, tol: float = 1e-9, match_tol: float = 1e-6) -> OrbitTrace:
    """Trace the ``N + 2`` collisions of the scaffold orbit on ``table``.

    Every collision must land on the designed point; an early or
    unexpected hit is reported as a :class:`ClearanceError` naming the
    segment and arclength that got in the way.
    """
    start = start_phase(bp, table)
    expected = orbit_points(bp)[1:] + [orbit_points(bp)[0]]
    tr = OrbitTrace([start], [position(table, start)], [])
    p = start
    for step, target in enumerate(expected):
        hit = shoot(table, position(table, p), outgoing(table, p), exclude=(p.segment, p.s))
        if float(np.hypot(*(hit.position - np.asarray(target)))) > match_tol:
            raise ClearanceError(
                f"step {step}: orbit hit segment {table.ids[hit.point.segment]} at s={hit.point.s:.12g} "
                f"instead of the designed point {tuple(np.round(target, 9))}",
                segment=table.ids[hit.point.segment], s=hit.point.s, step=step)
        p = hit.point
        tr.points.append(p)
        tr.positions.append(hit.position)
        tr.flights.append(hit.flight)
    err = closure_error(table, start, p)
    if err > tol:
        raise ValidationError(f"scaffold orbit does not close: error {err:.3e} > {tol:.1e}")
    return tr


def polygon_table_orbit(N: int, r: float, table: Table) -> OrbitTrace:
    """Regular ``N``-gon orbit on a table containing the full base circle."""
    i, s, _ = table.locate(np.array([r, 0.0]))
    v = np.array([-math.sin(math.pi / N), math.cos(math.pi / N)])
    start = phase_from_direction(table, i, s, v)
    tr = OrbitTrace([start], [position(table, start)], [])
    p = start
    for _ in range(N):
        hit = shoot(table, position(table, p), outgoing(table, p), exclude=(p.segment, p.s))
        p = hit.point
        tr.points.append(p)
        tr.positions.append(hit.position)
        tr.flights.append(hit.flight)
    return tr
