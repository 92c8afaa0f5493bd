"""Planar geometry kernel for billiard tables.

Every segment is parameterised by arclength ``s`` in its traversal
direction, and the table interior lies to the *left* of that direction.
Signed curvature is positive where the boundary turns toward the interior
(focusing) and negative where it bends away from it (dispersing); for a
counter-clockwise circle of radius ``r`` it is ``+1/r``.

Segments are immutable once built and all queries are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    CornerError,
    DomainError,
    GeometryError,
    GrazingError,
    ValidationError,
)

TWO_PI = 2.0 * math.pi
GRAZING_TOL = 1e-9
MIN_ADVANCE = 1e-9
CLOSURE_TOL = 1e-9

# Gauss-Legendre rule used for every position quadrature of intrinsic curves.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = math.hypot(v[0], v[1])
    if n == 0.0:
        raise DomainError("cannot normalise the zero vector")
    return v / n


def rotate(v, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def left_normal(t) -> np.ndarray:
    return np.array([-t[1], t[0]])


def cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _check_range(s: float, length: float) -> float:
    if not (-1e-12 <= s <= length + 1e-12 * max(1.0, length)):
        raise DomainError(f"arclength {s!r} outside [0, {length!r}]")
    return min(max(s, 0.0), length)


class RayHit(NamedTuple):
    segment: int
    s: float
    distance: float


# ---------------------------------------------------------------------------
# Segments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc swept from ``theta0`` to ``theta1`` (radians).

    ``ccw=True`` requires ``theta1 > theta0``; ``ccw=False`` requires
    ``theta1 < theta0``. A counter-clockwise arc bounds the interior from
    outside (focusing), a clockwise one bulges into it (dispersing).
    """

    center: tuple
    radius: float
    theta0: float
    theta1: float
    ccw: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ValidationError(f"arc radius must be positive, got {self.radius!r}")
        span = self.theta1 - self.theta0
        if self.ccw and not span > 0:
            raise ValidationError("ccw arc needs theta1 > theta0")
        if not self.ccw and not span < 0:
            raise ValidationError("cw arc needs theta1 < theta0")
        if abs(span) > TWO_PI + 1e-12:
            raise ValidationError("arc spans more than a full turn")

    @property
    def span(self) -> float:
        return abs(self.theta1 - self.theta0)

    @property
    def length(self) -> float:
        return self.radius * self.span

    def _angle(self, s: float) -> float:
        d = s / self.radius
        return self.theta0 + d if self.ccw else self.theta0 - d

    def point_at(self, s: float) -> np.ndarray:
        s = _check_range(s, self.length)
        a = self._angle(s)
        cx, cy = self.center
        return np.array([cx + self.radius * math.cos(a), cy + self.radius * math.sin(a)])

    def tangent_normal_at(self, s: float):
        s = _check_range(s, self.length)
        a = self._angle(s)
        t = np.array([-math.sin(a), math.cos(a)])
        if not self.ccw:
            t = -t
        return t, left_normal(t)

    def curvature_at(self, s: float) -> float:
        _check_range(s, self.length)
        return 1.0 / self.radius if self.ccw else -1.0 / self.radius

    def arclength_of_angle(self, angle: float) -> float | None:
        """Arclength of the point at polar ``angle``, or ``None`` if off the arc."""
        if self.ccw:
            a = (angle - self.theta0) % TWO_PI
        else:
            a = (self.theta0 - angle) % TWO_PI
        span = self.span
        if a > span + 1e-12:
            if TWO_PI - a < 1e-12:
                a = 0.0
            else:
                return None
        return min(a, span) * self.radius

    def intersect_ray(self, origin, d, tmin: float):
        cx, cy = self.center
        ox, oy = origin[0] - cx, origin[1] - cy
        b = ox * d[0] + oy * d[1]
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = b * b - c
        if disc < 0.0:
            if disc < -1e-12 * self.radius * self.radius:
                return []
            disc = 0.0
        root = math.sqrt(disc)
        out = []
        for t in (-b - root, -b + root):
            if t <= tmin:
                continue
            px, py = ox + t * d[0], oy + t * d[1]
            s = self.arclength_of_angle(math.atan2(py, px))
            if s is not None:
                out.append((t, s))
        return out

    def project(self, q) -> tuple[float, float]:
        """Arclength of the arc point nearest ``q`` and the distance to it."""
        cx, cy = self.center
        ang = math.atan2(q[1] - cy, q[0] - cx)
        s = self.arclength_of_angle(ang)
        if s is None:
            cands = [0.0, self.length]
        else:
            cands = [s, 0.0, self.length]
        best = min(cands, key=lambda v: float(np.hypot(*(self.point_at(v) - q))))
        return best, float(np.hypot(*(self.point_at(best) - q)))

    def samples(self, n: int = 256) -> np.ndarray:
        s = np.linspace(0.0, self.length, n + 1)
        a = self.theta0 + (s / self.radius if self.ccw else -s / self.radius)
        cx, cy = self.center
        return np.column_stack([cx + self.radius * np.cos(a), cy + self.radius * np.sin(a)])


@dataclass(frozen=True)
class LineSegment:
    """Straight segment from ``a`` to ``b``."""

    a: tuple
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", (float(self.a[0]), float(self.a[1])))
        object.__setattr__(self, "b", (float(self.b[0]), float(self.b[1])))
        if self.length <= 0.0:
            raise ValidationError("line segment has zero length")

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])

    @property
    def _t(self) -> np.ndarray:
        L = self.length
        return np.array([(self.b[0] - self.a[0]) / L, (self.b[1] - self.a[1]) / L])

    def point_at(self, s: float) -> np.ndarray:
        s = _check_range(s, self.length)
        return np.asarray(self.a) + s * self._t

    def tangent_normal_at(self, s: float):
        _check_range(s, self.length)
        t = self._t
        return t, left_normal(t)

    def curvature_at(self, s: float) -> float:
        _check_range(s, self.length)
        return 0.0

    def intersect_ray(self, origin, d, tmin: float):
        t_hat = self._t
        L = self.length
        denom = cross(d, t_hat)
        if abs(denom) < 1e-15:
            return []
        w = (self.a[0] - origin[0], self.a[1] - origin[1])
        t = cross(w, t_hat) / denom
        s = cross(w, d) / denom
        if t <= tmin or s < -1e-12 * L or s > L * (1 + 1e-12):
            return []
        return [(t, min(max(s, 0.0), L))]

    def project(self, q) -> tuple[float, float]:
        s = float(np.dot(np.asarray(q) - np.asarray(self.a), self._t))
        s = min(max(s, 0.0), self.length)
        return s, float(np.hypot(*(self.point_at(s) - q)))

    def samples(self, n: int = 1) -> np.ndarray:
        return np.array([self.a, self.b])


@dataclass(frozen=True)
class CurvatureProfile:
    """Curvature prescribed at arclength knots, interpolated by PCHIP.

    The first knot sits at ``s = 0`` and the last one at ``total_length``.
    """

    s: tuple
    kappa: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in self.s)
        k = tuple(float(v) for v in self.kappa)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "kappa", k)
        if len(s) != len(k) or len(s) < 2:
            raise ValidationError("profile needs at least two (s, kappa) knots")
        if not all(math.isfinite(v) for v in s + k):
            raise ValidationError("profile knots must be finite")
        if s[0] != 0.0:
            raise ValidationError("first profile knot must sit at s = 0")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValidationError("profile knot arclengths must be strictly increasing")

    @classmethod
    def constant(cls, kappa: float, length: float) -> "CurvatureProfile":
        return cls((0.0, length), (kappa, kappa))

    @property
    def total_length(self) -> float:
        return self.s[-1]

    @cached_property
    def _interp(self) -> PchipInterpolator:
        return PchipInterpolator(np.array(self.s), np.array(self.kappa), extrapolate=True)

    @cached_property
    def _turning(self):
        return self._interp.antiderivative()

    def __call__(self, s):
        return self._interp(s)

    def turning(self, s):
        """Integral of curvature from 0 to ``s``."""
        return self._turning(s)

    def max_abs(self, n: int = 4096) -> float:
        grid = np.union1d(np.linspace(0.0, self.total_length, n + 1), self.s)
        return float(np.max(np.abs(self(grid))))


class IntrinsicCurve:
    """Plane curve rebuilt from its curvature profile.

    The tangent angle is the exact integral of the piecewise-cubic
    curvature; positions come from Gauss-Legendre quadrature on a dense
    grid (at least 4096 cells, knots included as breakpoints).
    """

    def __init__(self, profile: CurvatureProfile, start, heading0: float, cells: int = 4096):
        self.profile = profile
        self.start = (float(start[0]), float(start[1]))
        self.heading0 = float(heading0)
        self.cells = int(cells)
        L = profile.total_length
        grid = np.union1d(np.linspace(0.0, L, self.cells + 1), np.array(profile.s))
        self._grid = grid
        a, b = grid[:-1], grid[1:]
        nodes = a[:, None] + (b - a)[:, None] * _GL_X[None, :]
        th = self.heading0 + profile.turning(nodes)
        w = (b - a)[:, None] * _GL_W[None, :]
        dx = np.sum(w * np.cos(th), axis=1)
        dy = np.sum(w * np.sin(th), axis=1)
        pts = np.empty((grid.size, 2))
        pts[0] = self.start
        pts[1:, 0] = self.start[0] + np.cumsum(dx)
        pts[1:, 1] = self.start[1] + np.cumsum(dy)
        self._pts = pts
        pad = 1e-7
        self._bbox = (pts[:, 0].min() - pad, pts[:, 1].min() - pad,
                      pts[:, 0].max() + pad, pts[:, 1].max() + pad)

    def __repr__(self):
        return (f"IntrinsicCurve(length={self.length!r}, start={self.start!r}, "
                f"heading0={self.heading0!r})")

    def __getstate__(self):
        return {"profile": self.profile, "start": self.start,
                "heading0": self.heading0, "cells": self.cells}

    def __setstate__(self, state):
        self.__init__(state["profile"], state["start"], state["heading0"], state["cells"])

    @property
    def length(self) -> float:
        return self.profile.total_length

    @property
    def grid(self) -> np.ndarray:
        return self._grid

    @property
    def grid_points(self) -> np.ndarray:
        return self._pts

    def heading(self, s):
        return self.heading0 + self.profile.turning(s)

    def point_at(self, s: float) -> np.ndarray:
        s = _check_range(s, self.length)
        k = int(np.searchsorted(self._grid, s, side="right")) - 1
        k = min(max(k, 0), self._grid.size - 2)
        s0 = self._grid[k]
        h = s - s0
        if h == 0.0:
            return self._pts[k].copy()
        th = self.heading(s0 + h * _GL_X)
        return self._pts[k] + h * np.array([np.dot(_GL_W, np.cos(th)), np.dot(_GL_W, np.sin(th))])

    def tangent_normal_at(self, s: float):
        s = _check_range(s, self.length)
        th = float(self.heading(s))
        t = np.array([math.cos(th), math.sin(th)])
        return t, left_normal(t)

    def curvature_at(self, s: float) -> float:
        s = _check_range(s, self.length)
        return float(self.profile(s))

    def _point_heading(self, s: float):
        k = int(np.searchsorted(self._grid, s, side="right")) - 1
        k = min(max(k, 0), self._grid.size - 2)
        s0 = self._grid[k]
        h = s - s0
        th = self.heading0 + self.profile.turning(np.append(s0 + h * _GL_X, s))
        p = self._pts[k] + h * np.array([np.dot(_GL_W, np.cos(th[:-1])), np.dot(_GL_W, np.sin(th[:-1]))])
        return p, float(th[-1])

    def _ray_fn(self, s, origin, d):
        p, th = self._point_heading(s)
        f = d[0] * (p[1] - origin[1]) - d[1] * (p[0] - origin[0])
        fp = d[0] * math.sin(th) - d[1] * math.cos(th)
        return f, fp, p

    def _refine(self, lo, hi, flo, fhi, origin, d):
        # safeguarded Newton started from the secant point
        s = lo - flo * (hi - lo) / (fhi - flo)
        tol = 4e-16 * max(1.0, self.length)
        floor = 4e-16 * (1.0 + abs(origin[0]) + abs(origin[1]))
        for _ in range(60):
            f, fp, _ = self._ray_fn(s, origin, d)
            if abs(f) <= floor:
                return s
            if (f < 0) == (flo < 0):
                lo, flo = s, f
            else:
                hi = s
            s_new = s - f / fp if fp != 0.0 else math.inf
            if not (lo <= s_new <= hi):
                s_new = 0.5 * (lo + hi)
            if abs(s_new - s) <= tol or hi - lo <= tol:
                return s_new
            s = s_new
        return s

    def _ray_hits_bbox(self, origin, d) -> bool:
        x0, y0, x1, y1 = self._bbox
        tlo, thi = 0.0, math.inf
        for o, dd, lo, hi in ((origin[0], d[0], x0, x1), (origin[1], d[1], y0, y1)):
            if abs(dd) < 1e-300:
                if o < lo or o > hi:
                    return False
                continue
            a, b = (lo - o) / dd, (hi - o) / dd
            if a > b:
                a, b = b, a
            tlo, thi = max(tlo, a), min(thi, b)
            if tlo > thi:
                return False
        return True

    def intersect_ray(self, origin, d, tmin: float, exclude_s: float | None = None):
        if not self._ray_hits_bbox(origin, d):
            return []
        pts = self._pts
        f = d[0] * (pts[:, 1] - origin[1]) - d[1] * (pts[:, 0] - origin[0])
        sgn = np.sign(f)
        idx = np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]
        out = []
        seen = set()
        for k in idx:
            lo, hi = self._grid[k], self._grid[k + 1]
            ahead = (pts[k:k + 2] - origin) @ d
            if ahead.max() <= tmin:
                continue
            if f[k] == 0.0:
                s = lo
            elif f[k + 1] == 0.0:
                s = hi
            else:
                s = self._refine(lo, hi, f[k], f[k + 1], origin, d)
            key = round(s, 12)
            if key in seen:
                continue
            seen.add(key)
            if exclude_s is not None and abs(s - exclude_s) < 1e-8:
                continue
            p = self.point_at(s)
            t = (p[0] - origin[0]) * d[0] + (p[1] - origin[1]) * d[1]
            if t > tmin:
                out.append((t, s))
        return out

    def project(self, q) -> tuple[float, float]:
        q = np.asarray(q, dtype=float)
        k = int(np.argmin(np.hypot(self._pts[:, 0] - q[0], self._pts[:, 1] - q[1])))
        s = float(self._grid[k])
        for _ in range(50):
            p = self.point_at(s)
            t, _ = self.tangent_normal_at(s)
            g = float(np.dot(p - q, t))
            kap = self.curvature_at(s)
            gp = 1.0 + kap * float(np.dot(p - q, left_normal(t)))
            s_new = min(max(s - g / gp, 0.0), self.length)
            if abs(s_new - s) < 1e-15:
                s = s_new
                break
            s = s_new
        return s, float(np.hypot(*(self.point_at(s) - q)))

    def samples(self, n: int | None = None) -> np.ndarray:
        return self._pts


def curve_from_curvature(profile: CurvatureProfile, start, heading0: float) -> IntrinsicCurve:
    """Integrate a curvature profile into a planar curve."""
    if not isinstance(profile, CurvatureProfile):
        raise ValidationError("profile must be a CurvatureProfile")
    return IntrinsicCurve(profile, start, heading0)


def point_at(seg, s: float) -> np.ndarray:
    return seg.point_at(s)


def tangent_normal_at(seg, s: float):
    return seg.tangent_normal_at(s)


def curvature_at(seg, s: float) -> float:
    return seg.curvature_at(s)


def end_points(seg):
    return seg.point_at(0.0), seg.point_at(seg.length)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Table:
    """Closed chain of segments with the interior on the left."""

    segments: tuple
    name: str = "table"
    ids: tuple | None = None
    validate: bool = True
    _offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValidationError("table has no segments")
        ids = tuple(self.ids) if self.ids is not None else tuple(f"s{i}" for i in range(len(segs)))
        if len(ids) != len(segs) or len(set(ids)) != len(ids):
            raise ValidationError("segment ids must be unique, one per segment")
        object.__setattr__(self, "ids", ids)
        offs = np.concatenate([[0.0], np.cumsum([seg.length for seg in segs])])
        object.__setattr__(self, "_offsets", offs)
        if self.validate:
            gap = self.closure_gap()
            if gap > CLOSURE_TOL:
                raise ValidationError(f"table {self.name!r} is not closed (gap {gap:.3e})")
            if self.signed_area() <= 0.0:
                raise ValidationError(f"table {self.name!r} is not oriented with interior on the left")

    def __len__(self):
        return len(self.segments)

    @property
    def perimeter(self) -> float:
        return float(self._offsets[-1])

    def offset(self, i: int) -> float:
        return float(self._offsets[i])

    def closure_gap(self) -> float:
        gaps = []
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % len(self.segments)]
            gaps.append(float(np.hypot(*(seg.point_at(seg.length) - nxt.point_at(0.0)))))
        return max(gaps)

    def polyline(self) -> np.ndarray:
        return np.vstack([seg.samples() for seg in self.segments])

    def signed_area(self) -> float:
        p = self.polyline()
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def cumulative(self, segment: int, s: float) -> float:
        return float(self._offsets[segment]) + s

    def locate_cumulative(self, S: float) -> tuple[int, float]:
        S = S % self.perimeter
        i = int(np.searchsorted(self._offsets, S, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return i, S - float(self._offsets[i])

    def curvature_at_boundary(self, S: float, tol: float = 1e-9) -> float:
        """Signed curvature at cumulative arclength ``S``; corners raise."""
        S = S % self.perimeter
        for i in range(len(self.segments) + 1):
            o = float(self._offsets[i])
            if abs(S - o) < tol or (i == 0 and abs(S - self.perimeter) < tol):
                prev = self.segments[(i - 1) % len(self.segments)]
                nxt = self.segments[i % len(self.segments)]
                left = prev.curvature_at(prev.length)
                right = nxt.curvature_at(0.0)
                raise CornerError(f"corner at S={S!r}: one-sided curvatures {left!r}, {right!r}",
                                  segment=i % len(self.segments), s=0.0, one_sided=(left, right))
        i, s = self.locate_cumulative(S)
        return self.segments[i].curvature_at(s)

    def locate(self, q) -> tuple[int, float, float]:
        """Segment index, arclength and distance of the boundary point nearest ``q``."""
        best = None
        for i, seg in enumerate(self.segments):
            s, dist = seg.project(q)
            if best is None or dist < best[2]:
                best = (i, s, dist)
        return best

    def bounding_box(self):
        p = self.polyline()
        return p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max()


def ray_intersect(table: Table, origin, d, exclude: tuple[int, float] | None = None) -> RayHit:
    """Nearest forward boundary hit of the ray ``origin + t d``.

    Hits closer than ``MIN_ADVANCE`` and the excluded boundary point are
    skipped. Raises :class:`GrazingError` when the hit is tangential.
    """
    origin = np.asarray(origin, dtype=float)
    d = np.asarray(d, dtype=float)
    if abs(math.hypot(d[0], d[1]) - 1.0) > 1e-12:
        raise DomainError("ray direction must be a unit vector")
    best = None
    for i, seg in enumerate(table.segments):
        if isinstance(seg, IntrinsicCurve):
            ex = exclude[1] if exclude is not None and exclude[0] == i else None
            cands = seg.intersect_ray(origin, d, MIN_ADVANCE, exclude_s=ex)
        else:
            cands = seg.intersect_ray(origin, d, MIN_ADVANCE)
            if exclude is not None and exclude[0] == i:
                cands = [(t, s) for t, s in cands if abs(s - exclude[1]) >= 1e-8]
        for t, s in cands:
            if best is None or t < best[2]:
                best = (i, s, t)
    if best is None:
        raise GeometryError("ray leaves the table without hitting the boundary")
    i, s, t = best
    _, n = table.segments[i].tangent_normal_at(s)
    if abs(d[0] * n[0] + d[1] * n[1]) < GRAZING_TOL:
        raise GrazingError(f"tangential hit on segment {table.ids[i]} at s={s!r}")
    return RayHit(i, s, t)


def circle_table(r: float = 1.0, center=(0.0, 0.0), name: str = "circle") -> Table:
    return Table((ArcSegment(center, r, 0.0, TWO_PI, True),), name=name, ids=("a",))


def folded_flower(N: int, r: float = 1.0) -> Table:
    """Circle of radius ``r`` cut by the vertical chord at ``x = r cos(pi/N)``."""
    a = math.pi / N
    arc = ArcSegment((0.0, 0.0), r, a, TWO_PI - a, True)
    p0, p1 = arc.point_at(arc.length), arc.point_at(0.0)
    chord = LineSegment((p0[0], p0[1]), (p1[0], p1[1]))
    return Table((arc, chord), name=f"folded-flower-{N}", ids=("arc", "wall"))


def polygon_area(points: Sequence) -> float:
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
