"""Deterministic SVG 1.1 figures of tables, orbits and phase portraits.

Element ids: ``base-arc``, ``gamma``, ``ngon``, ``orbit``, ``strip-left``,
``strip-right`` and ``trajectory-<k>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .construction import OrbitBlueprint, orbit_points
from .errors import ValidationError
from .geometry import ArcSegment, Table

MARGIN = 0.05
_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass
class PhasePortraitData:
    """Birkhoff-coordinate samples ``(S, sin phi)`` per trajectory."""

    trajectories: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.trajectories = [np.asarray(t, dtype=float).reshape(-1, 2) for t in self.trajectories]
        if not self.labels:
            self.labels = [f"trajectory-{k}" for k in range(len(self.trajectories))]
        if len(self.labels) != len(self.trajectories):
            raise ValidationError("one label per trajectory")
        for t in self.trajectories:
            if t.size and np.max(np.abs(t[:, 1])) > 1.0:
                raise ValidationError("sin(phi) outside [-1, 1]")


def _f(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _path(points, closed=False) -> str:
    pts = np.asarray(points, dtype=float)
    d = "M" + " L".join(f"{_f(x)},{_f(-y)}" for x, y in pts)
    return d + (" Z" if closed else "")


def _header(x0, y0, w, h, width_px=800) -> list:
    height_px = int(round(width_px * h / w)) if w > 0 else width_px
    return ['<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px}" height="{height_px}" '
            f'viewBox="{_f(x0)} {_f(y0)} {_f(w)} {_f(h)}">']


def _box(xmin, ymin, xmax, ymax):
    w, h = xmax - xmin, ymax - ymin
    pad = MARGIN * max(w, h)
    return xmin - pad, ymin - pad, w + 2 * pad, h + 2 * pad


def render_scene(table: Table, bp: OrbitBlueprint | None = None, gamma=None, trajectories=None,
                 orbit: bool = True) -> str:
    """Table outline with the scaffold orbit, the N-gon and the strip guides.

    Coordinates are in table units with ``y`` flipped to point up.
    """
    xmin, ymin, xmax, ymax = table.bounding_box()
    x0, y0, w, h = _box(xmin, -ymax, xmax, -ymin)
    sw = 0.004 * max(w, h)
    out = _header(x0, y0, w, h)
    out.append(f'<g fill="none" stroke-linejoin="round" stroke-width="{_f(sw)}">')
    arcs = [seg for seg in table.segments if isinstance(seg, ArcSegment)]
    rest = [(i, seg) for i, seg in zip(table.ids, table.segments) if not isinstance(seg, ArcSegment)]
    if arcs:
        d = " ".join(_path(seg.samples(512)) for seg in arcs)
        out.append(f'<path id="base-arc" stroke="#000000" d="{d}"/>')
    if rest:
        d = " ".join(_path(seg.samples()) for _, seg in rest)
        out.append(f'<path id="gamma" stroke="#1f77b4" stroke-width="{_f(1.5 * sw)}" d="{d}"/>')
    if bp is not None:
        N, r = bp.N, bp.r
        ang = math.pi / N + 2 * math.pi * np.arange(N) / N
        poly = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        out.append(f'<path id="ngon" stroke="#7f7f7f" stroke-dasharray="{_f(2 * sw)},{_f(2 * sw)}" '
                   f'd="{_path(poly, closed=True)}"/>')
        c, half = bp.chord_x, r * math.sin(math.pi / N)
        for tag, x in (("strip-left", c - bp.Delta), ("strip-right", c + bp.Delta)):
            out.append(f'<path id="{tag}" stroke="#2ca02c" stroke-width="{_f(0.5 * sw)}" '
                       f'd="{_path([(x, -half), (x, half)])}"/>')
        if orbit:
            out.append(f'<path id="orbit" stroke="#d62728" d="{_path(orbit_points(bp), closed=True)}"/>')
    for k, tr in enumerate(trajectories or []):
        col = _COLORS[k % len(_COLORS)]
        out.append(f'<path id="trajectory-{k}" stroke="{col}" stroke-width="{_f(0.5 * sw)}" d="{_path(tr)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_phase_portrait(data: PhasePortraitData, width: float = 1000.0, height: float = 600.0) -> str:
    """Scatter plot of Birkhoff samples fitted into a ``width x height`` box."""
    pts = [t for t in data.trajectories if t.size]
    if not pts:
        raise ValidationError("no phase-portrait samples")
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    x0, y0, w, h = _box(0.0, 0.0, width, height)
    rad = 0.002 * width
    out = _header(x0, y0, w, h, width_px=int(width))
    out.append(f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="none" stroke="#000000" '
               f'stroke-width="{_f(rad / 2)}"/>')
    for k, (t, label) in enumerate(zip(data.trajectories, data.labels)):
        col = _COLORS[k % len(_COLORS)]
        out.append(f'<g id="trajectory-{k}" fill="{col}"><title>{escape(str(label))}</title>')
        u = (t - lo) / span
        for a, b in u:
            out.append(f'<circle cx="{_f(a * width)}" cy="{_f((1 - b) * height)}" r="{_f(rad)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
