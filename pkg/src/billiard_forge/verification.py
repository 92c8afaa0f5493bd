"""Numerical evidence for the stability of the scaffold orbit.

All probes work in Birkhoff coordinates ``(S, sin phi)`` where ``S`` is the
cumulative boundary arclength. Positions are always recomputed from
``(segment, s)``, so long runs do not accumulate drift in ``S``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .construction import OrbitBlueprint, arc_start_phase, closure_error, last_arc_phase, start_phase
from .dynamics import (
    PhasePoint,
    billiard_step,
    birkhoff,
    birkhoff_return_jacobian,
    from_birkhoff,
    monodromy_fd,
    monodromy_product,
    relative_error,
    trace_orbit,
)
from .errors import BilliardForgeError, DomainError, GeometryError, VerificationError
from .geometry import Table
from .stability import classify, r0_from_k0, trace_closed_form


# ---------------------------------------------------------------------------
# Closure and monodromy
# ---------------------------------------------------------------------------


@dataclass
class ClosureReport:
    closure_error: float
    tol: float
    ok: bool
    period: int
    points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"closure_error": self.closure_error, "tol": self.tol, "ok": self.ok,
                "period": self.period,
                "points": [[float(x), float(y)] for x, y in self.points]}


def verify_periodic(table: Table, bp: OrbitBlueprint, tol: float = 1e-9) -> ClosureReport:
    """Iterate ``N + 2`` steps from the upper contact and measure the return error."""
    start = start_phase(bp, table)
    try:
        tr = trace_orbit(table, start, bp.period)
    except GeometryError as e:
        raise VerificationError(f"orbit broke down: {e}") from e
    err = closure_error(table, start, tr.points[-1])
    return ClosureReport(err, tol, err < tol, bp.period, [tuple(p) for p in tr.positions])


def contact_curvature(table: Table, bp: OrbitBlueprint) -> float:
    """Contact curvature read off the table, positive when dispersing."""
    i, s, _ = table.locate(bp.gamma0_point)
    return -table.segments[i].curvature_at(s)


def monodromy_check(table: Table, bp: OrbitBlueprint, h: float = 1e-6) -> dict:
    """Finite-difference monodromy against the analytic product."""
    k0 = contact_curvature(table, bp)
    Ma = monodromy_product(bp, k0)
    Mfd, Mrich, rich_err = monodromy_fd(table, last_arc_phase(bp, table), bp.period, h=h, return_check=True)
    rel = relative_error(Mfd, Ma)
    entry = float(np.max(np.abs(Mfd - Ma) / np.maximum(np.abs(Ma), 1e-300)))
    return {"k0": k0, "analytic": Ma.tolist(), "finite_difference": Mfd.tolist(),
            "relative_error": rel, "entrywise_relative_error": entry,
            "richardson_error": rich_err, "det_fd": float(np.linalg.det(Mfd)),
            "trace": float(np.trace(Ma))}


# ---------------------------------------------------------------------------
# Island probe
# ---------------------------------------------------------------------------


@dataclass
class IslandProbeReport:
    delta: float
    iterations: int
    max_deviation: float
    threshold: float
    verdict: str  # "bounded" | "escaped" | "aborted"
    escaped_at: int | None = None
    per_trajectory: list = field(default_factory=list)
    trajectory: list = field(default_factory=list, repr=False)
    message: str = ""

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded"

    def to_dict(self) -> dict:
        return {"delta": self.delta, "iterations": self.iterations, "max_deviation": self.max_deviation,
                "threshold": self.threshold, "verdict": self.verdict, "escaped_at": self.escaped_at,
                "per_trajectory": self.per_trajectory, "message": self.message}


def _wrap(dS, per):
    return (dS + per / 2) % per - per / 2


def _run_probe(args):
    table, base, z0, n, period, threshold, keep = args
    per = table.perimeter
    S0, u0 = birkhoff(table, base)
    p = from_birkhoff(table, z0[0], z0[1])
    worst = math.hypot(_wrap(z0[0] - S0, per), z0[1] - u0)
    samples = []
    for k in range(1, n + 1):
        try:
            p = billiard_step(table, p)
        except BilliardForgeError as e:
            return {"max": worst, "escaped": None, "aborted": f"step {k}: {e}", "samples": samples}
        if k % period == 0:
            S, u = birkhoff(table, p)
            dS, du = _wrap(S - S0, per), u - u0
            dev = math.hypot(dS, du)
            worst = max(worst, dev)
            if keep:
                samples.append((dS, du))
            if dev > threshold:
                return {"max": worst, "escaped": k, "aborted": None, "samples": samples}
    return {"max": worst, "escaped": None, "aborted": None, "samples": samples}


def probe_base(table: Table, bp: OrbitBlueprint) -> PhasePoint:
    """Periodic phase point used as the probe centre (the first arc collision)."""
    return arc_start_phase(bp, table)


def island_probe(table: Table, bp: OrbitBlueprint, delta: float = 1e-4, n: int = 100_000,
                 n_traj: int = 8, threshold: float | None = None, workers: int = 1,
                 keep_trajectory: bool = True) -> IslandProbeReport:
    """Launch ``n_traj`` orbits on a circle of radius ``delta`` around the periodic point.

    ``n`` counts billiard-map steps; deviations are sampled once per period.
    The verdict is ``bounded`` when no sampled deviation exceeds
    ``threshold`` (default ``100 * delta``).
    """
    if not 0 <= delta <= 1e-3:
        raise DomainError("delta must lie in [0, 1e-3]")
    if n_traj < 8:
        raise DomainError("at least 8 perturbations are required")
    if threshold is None:
        threshold = 100 * delta if delta > 0 else 1e-9
    base = probe_base(table, bp)
    S0, u0 = birkhoff(table, base)
    jobs = []
    for j in range(n_traj):
        a = 2 * math.pi * j / n_traj
        z0 = (S0 + delta * math.cos(a), u0 + delta * math.sin(a))
        jobs.append((table, base, z0, n, bp.period, threshold, keep_trajectory and j == 0))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_probe, jobs))
    else:
        results = [_run_probe(j) for j in jobs]
    worst = max(r["max"] for r in results)
    aborted = [r["aborted"] for r in results if r["aborted"]]
    escapes = [r["escaped"] for r in results if r["escaped"] is not None]
    if aborted:
        verdict, msg = "aborted", aborted[0]
    elif escapes:
        verdict, msg = "escaped", ""
    else:
        verdict, msg = "bounded", ""
    per = [{"index": j, "max_deviation": r["max"], "escaped_at": r["escaped"]} for j, r in enumerate(results)]
    return IslandProbeReport(delta, n, worst, threshold, verdict, min(escapes) if escapes else None,
                             per, results[0]["samples"], msg)


# ---------------------------------------------------------------------------
# Rotation numbers and twist
# ---------------------------------------------------------------------------


def _bump_weights(n: int) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return w / w.sum()


def loop_rotation_number(points: np.ndarray) -> float:
    """Weighted mean angle advance per sample of an orbit circling the origin.

    Folded into ``[0, 1/2]``.
    """
    z = np.asarray(points, dtype=float)
    ang = np.arctan2(z[:, 1], z[:, 0])
    d = np.diff(ang)
    d = (d + math.pi) % (2 * math.pi) - math.pi
    rho = abs(float(np.sum(_bump_weights(d.size) * d))) / (2 * math.pi)
    rho = rho % 1.0
    return min(rho, 1.0 - rho)


def loop_action(points: np.ndarray) -> float:
    """Enclosed area divided by ``2 pi`` of an orbit circling the origin."""
    z = np.asarray(points, dtype=float)
    order = np.argsort(np.arctan2(z[:, 1], z[:, 0]))
    x, y = z[order, 0], z[order, 1]
    area = 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    return area / (2 * math.pi)


def orbit_of_map(step: Callable, z0, n: int) -> np.ndarray:
    out = np.empty((n + 1, 2))
    z = np.asarray(z0, dtype=float)
    out[0] = z
    for k in range(n):
        z = np.asarray(step(z), dtype=float)
        out[k + 1] = z
    return out


def lift_rotation_number(step: Callable, z0, n: int) -> float:
    """Mean advance of the first (lifted) coordinate per iteration."""
    orb = orbit_of_map(step, z0, n)
    return float(orb[-1, 0] - orb[0, 0]) / n


def _period_orbit(table: Table, bp: OrbitBlueprint, base: PhasePoint, z0, periods: int) -> np.ndarray:
    per = table.perimeter
    S0, u0 = birkhoff(table, base)
    p = from_birkhoff(table, z0[0], z0[1])
    out = np.empty((periods + 1, 2))
    out[0] = (_wrap(z0[0] - S0, per), z0[1] - u0)
    for k in range(periods):
        for _ in range(bp.period):
            p = billiard_step(table, p)
        S, u = birkhoff(table, p)
        out[k + 1] = (_wrap(S - S0, per), u - u0)
    return out


def linear_rotation_number(table: Table, bp: OrbitBlueprint) -> float:
    rep = classify(2.0 * trace_closed_form(bp, r0_from_k0(bp, contact_curvature(table, bp))))
    if rep.classification != "elliptic":
        raise DomainError(f"configuration is {rep.classification}; rotation number undefined")
    return rep.rotation_number


def rotation_number(table: Table, bp: OrbitBlueprint, delta: float = 1e-5, periods: int = 2000) -> float:
    """Measured rotation number of an orbit started ``delta`` from the periodic point."""
    linear_rotation_number(table, bp)
    base = probe_base(table, bp)
    S0, u0 = birkhoff(table, base)
    orb = _period_orbit(table, bp, base, (S0 + delta, u0), periods)
    return loop_rotation_number(orb)


@dataclass
class TwistReport:
    amplitudes: list
    rotation_numbers: list
    actions: list
    slope: float
    slope_stderr: float
    slope_ci: tuple
    intercept: float
    intercept_stderr: float
    verdict: str  # "twist nonzero" | "inconclusive"
    linear_rotation_number: float | None = None
    note: str = "numerical evidence, not a proof"

    def to_dict(self) -> dict:
        return {"amplitudes": list(self.amplitudes), "rotation_numbers": list(self.rotation_numbers),
                "actions": list(self.actions), "slope": self.slope, "slope_stderr": self.slope_stderr,
                "slope_ci": list(self.slope_ci), "intercept": self.intercept,
                "intercept_stderr": self.intercept_stderr, "verdict": self.verdict,
                "linear_rotation_number": self.linear_rotation_number, "note": self.note}


def fit_twist(amplitudes: Sequence[float], actions: Sequence[float], rhos: Sequence[float],
              linear_rho: float | None = None) -> TwistReport:
    """Least-squares line of rotation number against action."""
    if len(actions) < 5:
        raise DomainError("a twist fit needs at least 5 amplitudes")
    x = np.asarray(actions, dtype=float)
    y = np.asarray(rhos, dtype=float)
    fit = stats.linregress(x, y)
    se = float(fit.stderr)
    tq = float(stats.t.ppf(0.975, x.size - 2))
    verdict = "twist nonzero" if abs(fit.slope) > 3 * se else "inconclusive"
    return TwistReport(list(map(float, amplitudes)), list(map(float, y)), list(map(float, x)),
                       float(fit.slope), se, (float(fit.slope - tq * se), float(fit.slope + tq * se)),
                       float(fit.intercept), float(fit.intercept_stderr), verdict, linear_rho)


def twist_of_map(step: Callable, center, amplitudes: Sequence[float], n: int = 4000) -> TwistReport:
    """Twist fit for a planar map with an elliptic fixed point at ``center``."""
    c = np.asarray(center, dtype=float)
    rhos, acts = [], []
    for a in amplitudes:
        orb = orbit_of_map(step, c + np.array([a, 0.0]), n) - c
        rhos.append(loop_rotation_number(orb))
        acts.append(loop_action(orb))
    return fit_twist(amplitudes, acts, rhos)


def twist_estimate(table: Table, bp: OrbitBlueprint, amplitudes: Sequence[float] = (1e-5, 2e-5, 5e-5, 1e-4, 2e-4),
                   periods: int = 2000) -> TwistReport:
    """Rotation number against enclosed action for orbits around the periodic point."""
    rho_lin = linear_rotation_number(table, bp)
    base = probe_base(table, bp)
    S0, u0 = birkhoff(table, base)
    rhos, acts = [], []
    for a in amplitudes:
        try:
            orb = _period_orbit(table, bp, base, (S0 + a, u0), periods)
        except GeometryError:
            return TwistReport(list(amplitudes), rhos, acts, math.nan, math.nan, (math.nan, math.nan),
                               math.nan, math.nan, "inconclusive", rho_lin)
        if np.max(np.hypot(orb[:, 0], orb[:, 1])) > 100 * a:
            return TwistReport(list(amplitudes), rhos, acts, math.nan, math.nan, (math.nan, math.nan),
                               math.nan, math.nan, "inconclusive", rho_lin)
        rhos.append(loop_rotation_number(orb))
        acts.append(loop_action(orb))
    return fit_twist(amplitudes, acts, rhos, rho_lin)


# ---------------------------------------------------------------------------
# Hyperbolic growth and area preservation
# ---------------------------------------------------------------------------


def separation_rate(table: Table, bp: OrbitBlueprint, delta: float = 1e-9, periods: int = 8) -> dict:
    """Growth per period of a perturbation along the unstable direction.

    Compared with ``log`` of the largest analytic monodromy eigenvalue.
    """
    base = probe_base(table, bp)
    J = birkhoff_return_jacobian(table, base, bp.period)
    vals, vecs = np.linalg.eig(J)
    if np.max(np.abs(vals.imag)) > 0:
        raise DomainError("configuration is not hyperbolic")
    k = int(np.argmax(np.abs(vals.real)))
    v = vecs[:, k].real
    v = v / np.hypot(*v)
    S0, u0 = birkhoff(table, base)
    orb = _period_orbit(table, bp, base, (S0 + delta * v[0], u0 + delta * v[1]), periods)
    dev = np.hypot(orb[:, 0], orb[:, 1])
    rate = float(np.polyfit(np.arange(dev.size), np.log(dev), 1)[0])
    M = monodromy_product(bp, contact_curvature(table, bp))
    lam = float(np.max(np.abs(np.linalg.eigvals(M))))
    return {"measured": rate, "expected": math.log(lam), "deviations": dev.tolist(),
            "steps": periods * bp.period}


def area_preservation(table: Table, p: PhasePoint, box: float = 1e-6, n: int = 10_000,
                      seed: int = 0) -> float:
    """Monte Carlo estimate of the area scaling of one billiard step.

    Random points in a small box around ``p`` are mapped once and an
    affine map is fitted to the images; the determinant of its linear part
    is returned.
    """
    rng = np.random.default_rng(seed)
    S0, u0 = birkhoff(table, p)
    pts = rng.uniform(-box, box, size=(n, 2))
    per = table.perimeter
    img = np.empty_like(pts)
    T0 = birkhoff(table, billiard_step(table, p))
    for k, (a, b) in enumerate(pts):
        q = billiard_step(table, from_birkhoff(table, S0 + a, u0 + b))
        S, u = birkhoff(table, q)
        img[k] = (_wrap(S - T0[0], per), u - T0[1])
    X = np.column_stack([pts, np.ones(n)])
    coef, *_ = np.linalg.lstsq(X, img, rcond=None)
    return float(np.linalg.det(coef[:2, :].T))


def loop_area_drift(table: Table, bp: OrbitBlueprint, delta: float = 1e-4, periods: int = 1000) -> dict:
    """Enclosed area of the probe loop over the first and second half of a run."""
    base = probe_base(table, bp)
    S0, u0 = birkhoff(table, base)
    orb = _period_orbit(table, bp, base, (S0 + delta, u0), periods)
    half = orb.shape[0] // 2
    a1, a2 = loop_action(orb[:half]), loop_action(orb[half:])
    return {"first": a1, "second": a2, "relative_change": abs(a2 - a1) / a1}
