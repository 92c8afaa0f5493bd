"""Synthesis of the replacement wall near the cut chord.

The wall is built as a chain of intrinsic curves, mirror-symmetric about
the horizontal axis, passing through both contact points of the scaffold
orbit with the prescribed normals. Three families are available:

``"a"``
    smooth, dispersing (``k0 > 0``) at the contacts and focusing near the
    middle;
``"b"``
    three dispersing constant-curvature pieces joined by two convex
    corners placed between the contacts;
``"c"``
    smooth and strictly convex, with the focusing contact curvature
    ``-k0`` (default: the circle through both contacts) tapered off past
    the contacts.

Contact curvature ``k0`` follows the stability convention: positive for a
dispersing wall. The geometric curvature of the wall is ``-k0`` there.
Each wall ends where it meets the base circle; the base arc is then the
rest of that circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .construction import OrbitBlueprint, defect, derive_blueprint, orbit_edges, admissible_tau0
from .errors import (
    ClearanceError,
    DomainError,
    RescaleError,
    SelectionError,
    SynthesisError,
)
from .geometry import ArcSegment, CurvatureProfile, IntrinsicCurve, Table, TWO_PI
from .stability import (
    EllipticWindows,
    RESONANT_TRACES,
    classify,
    k0_from_r0,
    r0_from_k0,
    trace_closed_form,
    window_bounds,
)

SOLVE_CELLS = 512
TILT_CAP = 0.95  # fraction of eps the wall tilt may reach past the contacts


@dataclass
class _Piece:
    """Upper-half piece before placement: profile plus heading jump at its start."""

    profile: CurvatureProfile
    turn: float = 0.0


@dataclass
class GammaProfile:
    """A synthesized wall and everything needed to rebuild or rescale it."""

    variant: str
    pieces: tuple
    ids: tuple
    contact_upper: tuple  # (piece index, arclength)
    contact_lower: tuple
    k0: float
    strip_width: float
    half: list = field(repr=False, default_factory=list)
    mid: tuple = (0.0, 0.0)
    core_end: float = 0.0
    corners: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def end_points(self):
        return self.pieces[0].point_at(0.0), self.pieces[-1].point_at(self.pieces[-1].length)

    def contact_pose(self, upper: bool = True):
        i, s = self.contact_upper if upper else self.contact_lower
        p = self.pieces[i].point_at(s)
        _, n = self.pieces[i].tangent_normal_at(s)
        return p, n

    def samples(self) -> np.ndarray:
        return np.vstack([c.grid_points for c in self.pieces])

    def curvature_samples(self) -> np.ndarray:
        out = []
        for c in self.pieces:
            grid = np.union1d(c.grid, c.profile.s)
            out.append(c.profile(grid))
        return np.concatenate(out)

    def total_turning(self) -> float:
        return float(sum(c.profile.turning(c.length) for c in self.pieces))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "k0": self.k0,
            "strip_width": self.strip_width,
            "pieces": [{"id": i, "length": c.length} for i, c in zip(self.ids, self.pieces)],
            "contacts": {"upper": list(self.contact_upper), "lower": list(self.contact_lower)},
            "corners": [{"x": float(p[0]), "y": float(p[1]), "turn": t} for p, t in self.corners],
        }


# ---------------------------------------------------------------------------
# Parameter selection
# ---------------------------------------------------------------------------


def kappa_star(bp: OrbitBlueprint) -> tuple[float, float]:
    """Radius and (negative) curvature of the circle through both contacts."""
    if bp.eps <= 0:
        raise DomainError("the contact circle needs eps > 0")
    rho = bp.tau0 / (2.0 * math.sin(bp.eps / 2))
    return rho, -1.0 / rho


def ratio_bounds(bp: OrbitBlueprint) -> tuple[float, float]:
    """Bounds on ``k0 / K_star`` that keep a convex wall elliptic."""
    B = bp.tau_c / bp.N + defect(bp)
    den = B - bp.tau0
    if den <= 0:
        raise DomainError("tau0 is above tau_c/N + defect; no convex elliptic choice")
    return 0.5 * bp.tau0 / den, 0.5 * B / den


def tau0_window_convex(N: int, r: float, eps: float) -> tuple[float, float]:
    """Interval of ``tau0`` for which the contact circle gives an elliptic orbit.

    Solves ``tau0 = k (tau_c/N + defect(tau0))`` for ``k = 1/2`` and
    ``k = 2/3``.
    """
    lo, hi = admissible_tau0(N, r, eps)
    if eps == 0:
        bp = derive_blueprint(N, r, 0.0, 0.5 * hi)
        base = bp.tau_c / N
        return 0.5 * base, 2.0 * base / 3.0

    def g(t, k):
        bp = derive_blueprint(N, r, eps, t)
        return t - k * (bp.tau_c / N + defect(bp))

    a, b = hi * 1e-9, hi * (1 - 1e-9)
    out = []
    for k in (0.5, 2.0 / 3.0):
        if g(a, k) * g(b, k) > 0:
            raise SynthesisError("convex tau0 window is empty")
        out.append(brentq(g, a, b, args=(k,), xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))
    if not out[0] < out[1]:
        raise SynthesisError("convex tau0 window is empty")
    return out[0], out[1]


def pick_k0(bp: OrbitBlueprint, windows: EllipticWindows | None = None, strategy: str | float = "midpoint",
            window: str = "low", margin: float = 0.05) -> float:
    """Choose a contact curvature inside an elliptic window.

    ``strategy`` is ``"midpoint"`` or a target full trace. The returned
    ``k0`` keeps ``tr M`` at least ``margin`` away from every resonant
    trace; a request that lands on a resonance is moved to the nearest
    admissible trace.
    """
    if bp.eps <= 0:
        raise DomainError("k0/R0 conversion is undefined for eps = 0")
    if windows is None:
        windows = window_bounds(bp)
    if window == "low":
        lo, hi = windows.window_low
    elif window == "high":
        if windows.window_high is None:
            raise SelectionError("no high window for this blueprint")
        lo, hi = windows.window_high
    else:
        raise DomainError(f"unknown window {window!r}")
    lo, hi = min(lo, hi), max(lo, hi)

    def tr(R):
        return 2.0 * trace_closed_form(bp, R)

    def ok(t):
        return abs(t) <= 2 - margin and all(abs(t - v) >= margin for v in RESONANT_TRACES)

    if strategy == "midpoint":
        R = 0.5 * (lo + hi)
        if ok(tr(R)):
            return k0_from_r0(bp, R)
        target = tr(R)
    else:
        target = float(strategy)

    goal = target
    if not ok(goal):
        pad = margin + 1e-9
        edges = [v + sgn * pad for v in RESONANT_TRACES for sgn in (-1, 1)] + [2 - pad, -2 + pad]
        edges = [e for e in edges if ok(e)]
        if not edges:
            raise SelectionError(f"no trace keeps a margin of {margin} from every resonance")
        goal = min(edges, key=lambda e: abs(e - target))

    grid = np.linspace(lo, hi, 2001)
    traces = np.array([tr(R) for R in grid])
    diff = traces - goal
    for k in range(grid.size - 1):
        if diff[k] == 0.0 or diff[k] * diff[k + 1] < 0:
            R = grid[k] if diff[k] == 0.0 else brentq(lambda x: tr(x) - goal, grid[k], grid[k + 1], xtol=1e-15)
            if lo < R < hi and ok(tr(R)):
                return k0_from_r0(bp, R)
    inner = [k for k in range(1, grid.size - 1) if ok(traces[k])]
    if not inner:
        raise SelectionError(f"window ({lo:.6g}, {hi:.6g}) too narrow to avoid resonances by {margin}")
    k = min(inner, key=lambda j: abs(traces[j] - target))
    return k0_from_r0(bp, grid[k])


# ---------------------------------------------------------------------------
# Curve assembly
# ---------------------------------------------------------------------------


def _curve(profile, start, heading, cells=4096):
    return IntrinsicCurve(profile, start, heading, cells=cells)


def _chain(pieces, mid, cells):
    """Place upper-half pieces starting at ``mid`` with vertical heading."""
    curves = []
    start, heading = np.asarray(mid, dtype=float), math.pi / 2
    for k, pc in enumerate(pieces):
        if k > 0:
            heading = heading + pc.turn
        c = _curve(pc.profile, start, heading, cells)
        curves.append(c)
        start = c.point_at(c.length)
        heading = float(c.heading(c.length))
    return curves


def _cross_level(curve, value, coord, lo_s=0.0):
    """First arclength past ``lo_s`` where a coordinate function reaches ``value``."""
    grid = curve.grid
    if coord == "y":
        f = curve.grid_points[:, 1] - value
        fun = lambda s: curve.point_at(s)[1] - value
    else:
        f = np.hypot(curve.grid_points[:, 0], curve.grid_points[:, 1]) - value
        fun = lambda s: math.hypot(*curve.point_at(s)) - value
    k0 = int(np.searchsorted(grid, lo_s))
    for k in range(max(k0 - 1, 0), grid.size - 1):
        if grid[k + 1] <= lo_s:
            continue
        if f[k] <= 0 < f[k + 1] or (f[k] < 0 <= f[k + 1]):
            a = max(grid[k], lo_s)
            if fun(a) > 0:
                continue
            return brentq(fun, a, grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return None


def _with_last_knot(profile: CurvatureProfile, s_end: float) -> CurvatureProfile:
    s = [v for v in profile.s if v < s_end]
    k = list(profile.kappa[: len(s)])
    s.append(s_end)
    k.append(profile.kappa[-1])
    return CurvatureProfile(tuple(s), tuple(k))


def _mirror_merge(profile: CurvatureProfile) -> CurvatureProfile:
    L = profile.total_length
    s = list(profile.s)
    k = list(profile.kappa)
    fs = [L - v for v in reversed(s[1:])] + [L + v for v in s]
    fk = list(reversed(k[1:])) + k
    return CurvatureProfile(tuple(fs), tuple(fk))


def _mirror_reverse(profile: CurvatureProfile) -> CurvatureProfile:
    L = profile.total_length
    fs = [L - v for v in reversed(profile.s)]
    fk = list(reversed(profile.kappa))
    return CurvatureProfile(tuple(fs), tuple(fk))


def _finalize(bp: OrbitBlueprint, variant: str, pieces: list, core_end: float, params: dict,
              cells: int = 4096) -> GammaProfile:
    """Shift the upper half onto the contact, trim it at the circle, mirror it."""
    last = pieces[-1].profile
    tail = [k for s, k in zip(last.s, last.kappa) if s >= core_end - 1e-15]
    if len(tail) < 2 or any(v != tail[0] for v in tail):
        raise SynthesisError("last piece must end in a constant-curvature tail")
    y_c = bp.tau0 / 2
    x0 = bp.gamma0[0]
    draft = _chain(pieces, (0.0, 0.0), cells)
    s_c = _cross_level(draft[-1], y_c, "y")
    if s_c is None or s_c >= core_end:
        raise SynthesisError("wall never reaches the contact height before its tail")
    shift = x0 - draft[-1].point_at(s_c)[0]
    mid = (shift, 0.0)
    placed = _chain(pieces, mid, cells)
    # the core has to stay inside the disc
    for c in placed[:-1]:
        if np.max(np.hypot(c.grid_points[:, 0], c.grid_points[:, 1])) >= bp.r:
            raise SynthesisError("wall leaves the base disc before its final piece")
    s_exit = _cross_level(placed[-1], bp.r, "r", lo_s=core_end)
    if s_exit is None:
        raise SynthesisError("wall does not reach the base circle")
    if np.any(np.hypot(*placed[-1].grid_points[placed[-1].grid < core_end].T) >= bp.r):
        raise SynthesisError("wall core crosses the base circle")
    pieces = pieces[:-1] + [_Piece(_with_last_knot(last, s_exit), pieces[-1].turn)]
    half = _chain(pieces, mid, cells)

    # mirror: lower pieces reversed, first piece merged with its image
    full = []
    mirrored = []
    for k in range(len(half) - 1, 0, -1):
        c = half[k]
        prof = _mirror_reverse(c.profile)
        e = c.point_at(c.length)
        mirrored.append((prof, (e[0], -e[1]), math.pi - float(c.heading(c.length))))
    first = half[0]
    fe = first.point_at(first.length)
    merged = (_mirror_merge(first.profile), (fe[0], -fe[1]), math.pi - float(first.heading(first.length)))
    specs = mirrored + [merged]
    for k in range(1, len(half)):
        c = half[k]
        specs.append((c.profile, tuple(c.start), c.heading0))
    full = [_curve(p, st, hd, cells) for p, st, hd in specs]

    n = len(full)
    if n == 1:
        ids = ("gamma",)
    else:
        ids = tuple(["gamma-lower"] + [f"gamma-{k}" for k in range(1, n - 1)] + ["gamma-upper"])
        if n == 3:
            ids = ("gamma-lower", "gamma-mid", "gamma-upper")
    L_last_half = half[-1].length
    s_c_final = _cross_level(half[-1], y_c, "y")
    up = (n - 1, full[-1].length - (L_last_half - s_c_final))
    low = (0, L_last_half - s_c_final)
    k_contact = float(half[-1].profile(s_c_final))
    corners = []
    for k in range(1, n):
        a, b = full[k - 1], full[k]
        ta, _ = a.tangent_normal_at(a.length)
        tb, _ = b.tangent_normal_at(0.0)
        turn = math.atan2(ta[0] * tb[1] - ta[1] * tb[0], float(ta @ tb))
        if abs(turn) > 1e-12:
            corners.append((b.point_at(0.0), turn))
    gp = GammaProfile(
        variant=variant, pieces=tuple(full), ids=ids, contact_upper=up, contact_lower=low,
        k0=-k_contact, strip_width=bp.Delta, half=[(c.profile, tuple(c.start), c.heading0) for c in half],
        mid=mid, core_end=core_end, corners=corners, params=dict(params),
    )
    return gp


# ---------------------------------------------------------------------------
# Variant builders
# ---------------------------------------------------------------------------


def _smooth_upper(bp, kappa_c, after, sigma_guess, q_frac=0.25, plateau=None):
    """Smooth upper half with contact curvature ``kappa_c`` (geometric sign).

    The curvature is ``A`` on ``[0, q]``, ramps to ``kappa_c`` on the
    plateau around the contact and then follows the knots in ``after``
    (a function of the contact arclength returning extra knots and the
    core end). ``A`` is fixed by the total turning ``eps/2`` up to the
    contact, and the contact arclength by the contact height.
    """
    eps, tau0 = bp.eps, bp.tau0
    w = 0.1 * tau0 if plateau is None else plateau

    def knots(sig):
        q = q_frac * sig
        ramp = sig - w - q
        if ramp <= 0:
            raise SynthesisError("contact plateau is wider than the half wall")
        A = (eps / 2 - kappa_c * w - kappa_c * ramp / 2) / (q + ramp / 2)
        extra, core_end = after(sig)
        s = [0.0, q, sig - w] + [v for v, _ in extra]
        k = [A, A, kappa_c] + [v for _, v in extra]
        return CurvatureProfile(tuple(s), tuple(k)), A, core_end

    def y_err(sig):
        prof, _, _ = knots(sig)
        c = _curve(prof, (0.0, 0.0), math.pi / 2, SOLVE_CELLS)
        return c.point_at(sig)[1] - tau0 / 2

    lo, hi = 0.5 * tau0, 0.5 * tau0 * 1.05
    if y_err(lo) > 0 or y_err(hi) < 0:
        raise SynthesisError("cannot place the contact at the required height")
    sig = brentq(y_err, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    prof, A, core_end = knots(sig)
    return prof, A, sig, core_end


def _variant_a(bp, k0, params):
    tau0 = bp.tau0
    w = params.setdefault("plateau", 0.1 * tau0)
    ramp = params.setdefault("ramp", 0.1 * tau0)
    kappa_c = -k0
    L_far = 2.0 * bp.r

    def after(sig):
        core = sig + w + ramp
        return [(sig + w, kappa_c), (core, 0.0), (core + L_far, 0.0)], core

    prof, A, sig, core_end = _smooth_upper(bp, kappa_c, after, 0.5 * tau0, plateau=w)
    if A <= 0:
        raise SynthesisError(f"middle curvature {A:.3e} is not focusing; k0 too large for this shape")
    params["middle_curvature"] = A
    return [_Piece(prof)], core_end


def _variant_c(bp, k0, params, taper=True):
    tau0, eps, r, N = bp.tau0, bp.eps, bp.r, bp.N
    ext = params.setdefault("extension", 0.1 * tau0)
    ramp = params.setdefault("ramp", 0.1 * tau0)
    w = params.setdefault("plateau", 0.1 * tau0)
    frac = params.setdefault("tail_fraction", 0.125)
    kappa_c = -k0
    L_far = 2.0 * r

    if not taper:
        def after(sig):
            core = sig + ext
            return [(core, kappa_c), (core + L_far, kappa_c)], core
    else:
        def after(sig):
            core = sig + ext + ramp
            tail_len = max(1.05 * (r * math.sin(math.pi / N) - tau0 / 2 - ext - ramp), 0.0)
            budget = (TILT_CAP - 0.5) * eps - kappa_c * (ext + ramp / 2)
            k_t = min(frac * kappa_c, budget / (ramp / 2 + tail_len))
            if k_t <= 0:
                raise SynthesisError("extension too long: no convex taper keeps the wall clear")
            params["tail_curvature"] = k_t
            return [(sig + ext, kappa_c), (core, k_t), (core + L_far, k_t)], core

    prof, A, sig, core_end = _smooth_upper(bp, kappa_c, after, 0.5 * tau0, plateau=w)
    if A <= 0:
        raise SynthesisError("middle curvature is not focusing; wall would not be convex")
    params["middle_curvature"] = A
    return [_Piece(prof)], core_end


def _arc_point(p0, theta0, kappa, u):
    """Point at signed arclength ``u`` on a constant-curvature curve."""
    half = 0.5 * kappa * u
    sinc = math.sin(half) / half if half != 0 else 1.0
    ang = theta0 + half
    return np.array([p0[0] + u * math.cos(ang) * sinc, p0[1] + u * math.sin(ang) * sinc])


def _variant_b(bp, k0, params):
    tau0, eps = bp.tau0, bp.eps
    w = params.setdefault("plateau", 0.1 * tau0)
    kappa = -k0
    g0 = np.array(bp.gamma0[:2])
    th_c = math.pi / 2 + eps / 2
    y_corner = params.setdefault("corner_height", tau0 / 4)

    u_c = brentq(lambda u: _arc_point(g0, th_c, kappa, -u)[1] - y_corner, 0.0, tau0, xtol=1e-15)
    th_upper = th_c - kappa * u_c
    v_m = brentq(lambda v: _arc_point((0.0, 0.0), math.pi / 2, kappa, v)[1] - y_corner, 0.0, tau0, xtol=1e-15)
    th_mid_end = math.pi / 2 + kappa * v_m
    turn = th_upper - th_mid_end
    if not 0 < turn < math.pi / 2:
        raise SynthesisError(f"corner turning angle {turn:.3e} is not a convex corner below pi/2")
    L_far = 2.0 * bp.r
    mid_prof = CurvatureProfile.constant(kappa, v_m)
    up_prof = CurvatureProfile((0.0, u_c, u_c + w, u_c + w + L_far), (kappa,) * 4)
    params["corner_turn"] = turn
    return [_Piece(mid_prof), _Piece(up_prof, turn)], u_c + w


def synthesize(bp: OrbitBlueprint, variant: str, k0: float | None = None, *, extension: float | None = None,
               taper: bool = True, require_elliptic: bool = True, check: bool = True,
               cells: int = 4096) -> GammaProfile:
    """Build a wall of the requested variant realizing ``k0`` at the contacts.

    Parameters
    ----------
    bp : OrbitBlueprint
    variant : {"a", "b", "c"}
    k0 : float, optional
        Contact curvature, positive when dispersing. Defaults to the
        midpoint of the low window for ``"a"``/``"b"`` and to the contact
        circle for ``"c"``.
    extension : float, optional
        Variant ``"c"`` only: arclength kept at contact curvature past
        each contact (default ``0.1 * tau0``).
    taper : bool
        Variant ``"c"`` only. ``False`` keeps the contact curvature all
        the way to the base circle, which is the failing pure-arc control.
    require_elliptic : bool
        Reject contact curvatures whose monodromy is not elliptic.
    check : bool
        Run clearance and strip checks.
    """
    if variant not in ("a", "b", "c"):
        raise DomainError(f"unknown variant {variant!r}")
    if bp.eps <= 0:
        raise DomainError("synthesis needs eps > 0")
    if k0 is None:
        k0 = kappa_star(bp)[1] if variant == "c" else pick_k0(bp)
    k0 = float(k0)
    if variant == "a" and k0 < 0:
        raise DomainError("variant a needs k0 >= 0 (dispersing contacts)")
    if variant == "b" and not k0 > 0:
        raise DomainError("variant b needs k0 > 0")
    if variant == "c" and not k0 < 0:
        raise DomainError("variant c needs k0 < 0 (focusing contacts)")
    if require_elliptic:
        rep = classify(2.0 * trace_closed_form(bp, r0_from_k0(bp, k0)))
        if rep.classification != "elliptic":
            raise SynthesisError(f"k0 = {k0!r} gives a {rep.classification} orbit (tr M = {rep.trace:.6g})")
    params: dict = {}
    if extension is not None:
        params["extension"] = float(extension)
    if variant == "a":
        pieces, core_end = _variant_a(bp, k0, params)
    elif variant == "b":
        pieces, core_end = _variant_b(bp, k0, params)
    else:
        pieces, core_end = _variant_c(bp, k0, params, taper=taper)
    params["taper"] = taper
    gp = _finalize(bp, variant, pieces, core_end, params, cells)
    if check:
        check_clearance(gp, bp)
        check_strip(gp, bp)
    return gp


def flat_gamma(bp: OrbitBlueprint) -> GammaProfile:
    """Straight chord wall of the folded flower table."""
    c = bp.chord_x
    half_h = bp.r * math.sin(math.pi / bp.N)
    prof = CurvatureProfile((0.0, 2 * half_h), (0.0, 0.0))
    curve = IntrinsicCurve(prof, (c, -half_h), math.pi / 2)
    y = bp.tau0 / 2
    return GammaProfile("flat", (curve,), ("gamma",), (0, half_h + y), (0, half_h - y), 0.0, bp.Delta,
                        half=[(CurvatureProfile((0.0, half_h), (0.0, 0.0)), (c, 0.0), math.pi / 2)],
                        mid=(c, 0.0), core_end=0.0)


def build_table(gp: GammaProfile, bp: OrbitBlueprint, name: str | None = None) -> Table:
    """Close the wall with the remaining arc of the base circle."""
    start, end = gp.end_points
    th_end = math.atan2(end[1], end[0])
    th_start = math.atan2(start[1], start[0]) % TWO_PI
    arc = ArcSegment((0.0, 0.0), bp.r, th_end, th_start, True)
    name = name or f"variant-{gp.variant}-N{bp.N}"
    return Table((arc, *gp.pieces), name=name, ids=("arc", *gp.ids))


# ---------------------------------------------------------------------------
# Checks and reports
# ---------------------------------------------------------------------------


def check_strip(gp: GammaProfile, bp: OrbitBlueprint) -> float:
    """Largest horizontal distance to the chord line; raise if it exceeds the strip width."""
    c = bp.chord_x
    worst, where = 0.0, None
    for i, cur in enumerate(gp.pieces):
        d = np.abs(cur.grid_points[:, 0] - c)
        k = int(np.argmax(d))
        if d[k] > worst:
            worst, where = float(d[k]), (gp.ids[i], float(cur.grid[k]))
    if worst > bp.Delta * (1 + 1e-12):
        raise SynthesisError(f"strip violation: |x - chord| = {worst:.6g} > {bp.Delta:.6g} "
                             f"on {where[0]} at s={where[1]:.9g}")
    return worst


def clearance_report(gp: GammaProfile, bp: OrbitBlueprint, exclusion: float | None = None) -> dict:
    """Separation of the wall from every orbit edge away from the contacts."""
    if exclusion is None:
        exclusion = 1e-3 * bp.tau0
    contacts = [gp.contact_upper, gp.contact_lower]
    min_sep = math.inf
    problems = []
    for i, cur in enumerate(gp.pieces):
        s = cur.grid
        pts = cur.grid_points
        near = np.zeros(s.size, dtype=bool)
        for ci, cs in contacts:
            if ci == i:
                near |= np.abs(s - cs) < exclusion
        for e, (A, B) in enumerate(orbit_edges(bp)):
            L = float(np.hypot(*(B - A)))
            u = (B - A) / L
            rel = pts - A
            along = rel @ u
            dist = u[0] * rel[:, 1] - u[1] * rel[:, 0]
            inside = (along > 0) & (along < L) & ~near
            if not inside.any():
                continue
            min_sep = min(min_sep, float(np.min(np.abs(dist[inside]))))
            pair = inside[:-1] & inside[1:]
            flips = np.nonzero(pair & (np.sign(dist[:-1]) != np.sign(dist[1:])))[0]
            for k in flips:
                problems.append(("crossing", gp.ids[i], float(s[k]), e))
            ad = np.abs(dist)
            trip = inside[1:-1] & inside[:-2] & inside[2:]
            local = trip & (ad[1:-1] <= ad[:-2]) & (ad[1:-1] <= ad[2:]) & (ad[1:-1] < 1e-6 * bp.r)
            for k in np.nonzero(local)[0]:
                problems.append(("near-touch", gp.ids[i], float(s[k + 1]), e))
    return {"min_separation": min_sep, "problems": problems, "ok": not problems}


def check_clearance(gp: GammaProfile, bp: OrbitBlueprint) -> dict:
    rep = clearance_report(gp, bp)
    if not rep["ok"]:
        kind, seg, s, edge = rep["problems"][0]
        raise ClearanceError(f"wall {kind} with orbit edge {edge} on {seg} at s={s:.9g}",
                             segment=seg, s=s, step=edge)
    return rep


@dataclass(frozen=True)
class CurvatureBoundReport:
    sup_abs_curvature: float
    H: float
    Delta: float
    ratio: float
    C: float
    passed: bool

    def to_dict(self) -> dict:
        return {"sup_abs_curvature": self.sup_abs_curvature, "H": self.H, "Delta": self.Delta,
                "ratio": self.ratio, "C": self.C, "pass": self.passed}


def curvature_report(gp: GammaProfile, bp: OrbitBlueprint, C: float | None = None) -> CurvatureBoundReport:
    """Compare ``sup|K| H`` with ``C Delta / H``."""
    if C is None:
        C = 4 * bp.N + 1
    sup = float(np.max(np.abs(gp.curvature_samples())))
    H, D = bp.H, bp.Delta
    if sup == 0.0:
        ratio = 0.0
    elif D == 0.0:
        ratio = math.inf
    else:
        ratio = sup * H * H / D
    return CurvatureBoundReport(sup, H, D, ratio, float(C), bool(sup * H <= C * D / H))


def symmetry_error(gp: GammaProfile, n: int = 257) -> float:
    """Largest distance between wall samples and the mirror image of their partners."""
    total = sum(c.length for c in gp.pieces)
    offs = np.cumsum([0.0] + [c.length for c in gp.pieces])

    def at(S):
        k = min(int(np.searchsorted(offs, S, side="right")) - 1, len(gp.pieces) - 1)
        return gp.pieces[k].point_at(min(S - offs[k], gp.pieces[k].length))

    worst = 0.0
    for S in np.linspace(0.0, total, n):
        p, q = at(S), at(total - S)
        worst = max(worst, abs(p[0] - q[0]), abs(p[1] + q[1]))
    return worst


def contact_pose_error(gp: GammaProfile, bp: OrbitBlueprint) -> tuple[float, float]:
    """Position and normal-angle errors at the upper and lower contacts."""
    pos, ang = 0.0, 0.0
    for upper, ref in ((True, bp.gamma0), (False, bp.gamma0_mirror)):
        p, n = gp.contact_pose(upper)
        pos = max(pos, float(np.hypot(p[0] - ref[0], p[1] - ref[1])))
        a = math.atan2(n[1], n[0]) - math.atan2(ref[3], ref[2])
        ang = max(ang, abs((a + math.pi) % TWO_PI - math.pi))
    return pos, ang


def turning_bookkeeping(gp: GammaProfile) -> float:
    """Integrated curvature plus corner turns minus the net tangent rotation."""
    a, b = gp.pieces[0], gp.pieces[-1]
    net = float(b.heading(b.length)) - a.heading0
    return gp.total_turning() + sum(t for _, t in gp.corners) - net


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


def _transform_piece(profile, start, heading0, upto, f, c, n=2000):
    """Image of a curve piece under ``x -> c + f (x - c)`` as a new profile."""
    cur = IntrinsicCurve(profile, start, heading0)
    grid = np.union1d(np.linspace(0.0, upto, n + 1), [v for v in profile.s if v < upto])
    th = cur.heading(grid)
    kap = profile(grid)
    g = np.sqrt((f * np.cos(th)) ** 2 + np.sin(th) ** 2)
    kap_new = f * kap / g ** 3
    # new arclength: integral of g along the old curve, Gauss-Legendre per cell
    xg, wg = np.polynomial.legendre.leggauss(8)
    xg, wg = 0.5 * (xg + 1), 0.5 * wg
    a, b = grid[:-1], grid[1:]
    nodes = a[:, None] + (b - a)[:, None] * xg[None, :]
    thn = cur.heading(nodes)
    gn = np.sqrt((f * np.cos(thn)) ** 2 + np.sin(thn) ** 2)
    ds = np.sum((b - a)[:, None] * wg[None, :] * gn, axis=1)
    s_new = np.concatenate([[0.0], np.cumsum(ds)])
    p0 = cur.point_at(0.0)
    new_start = (c + f * (p0[0] - c), p0[1])
    th0 = float(cur.heading(0.0))
    new_heading = math.atan2(math.sin(th0), f * math.cos(th0))
    end_heading_old = float(cur.heading(upto))
    return s_new, kap_new, new_start, new_heading, end_heading_old


def rescale_epsilon(gp: GammaProfile, bp_old: OrbitBlueprint, bp_new: OrbitBlueprint,
                    check: bool = True) -> GammaProfile:
    """Scale the wall horizontally about the chord line to a smaller tilt.

    The factor is ``tan(eps_new/2) / tan(eps_old/2)``; the result is
    re-seated on the new contacts and trimmed at the base circle again.
    """
    if (bp_old.N, bp_old.r, bp_old.tau0) != (bp_new.N, bp_new.r, bp_new.tau0):
        raise DomainError("rescaling keeps N, r and tau0 fixed")
    if bp_new.eps > bp_old.eps:
        raise DomainError("rescaling only reduces eps")
    if bp_new.eps == bp_old.eps:
        return gp
    if gp.variant not in ("a", "b", "c"):
        raise DomainError("only synthesized walls can be rescaled")
    f = math.tan(bp_new.eps / 2) / math.tan(bp_old.eps / 2)
    c = bp_old.chord_x
    pieces = []
    prev_end_heading = None
    for k, (prof, start, heading0) in enumerate(gp.half):
        last = k == len(gp.half) - 1
        upto = gp.core_end if last else prof.total_length
        s_new, kap_new, _, new_heading, end_old = _transform_piece(prof, start, heading0, upto, f, c)
        s_list, k_list = list(s_new), list(kap_new)
        if last:
            s_list.append(s_list[-1] + 2.0 * bp_new.r)
            k_list.append(k_list[-1])
        new_prof = CurvatureProfile(tuple(s_list), tuple(k_list))
        turn = 0.0
        if k > 0:
            turn = new_heading - prev_end_heading
        pieces.append(_Piece(new_prof, turn))
        prev_end_heading = math.atan2(math.sin(end_old), f * math.cos(end_old))
    core_end = pieces[-1].profile.s[-2]
    params = dict(gp.params)
    params["rescaled_from_eps"] = bp_old.eps
    new = _finalize(bp_new, gp.variant, pieces, core_end, params)
    w_old, w_new = window_bounds(bp_old), window_bounds(bp_new)
    R_new = r0_from_k0(bp_new, new.k0)
    tr = 2.0 * trace_closed_form(bp_new, R_new)
    if not abs(tr) < 2.0:
        raise RescaleError(f"rescaled k0 = {new.k0:.6g} (R0 = {R_new:.6g}) leaves the elliptic windows: "
                           f"old {w_old.window_low}/{w_old.window_high}, new {w_new.window_low}/{w_new.window_high}")
    if check:
        check_clearance(new, bp_new)
        check_strip(new, bp_new)
    return new
