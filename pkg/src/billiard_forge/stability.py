"""Closed-form trace of the scaffold monodromy and its elliptic windows.

``R0`` is the effective reflection parameter at the contacts,
``R0 = 2 k0 / sin(eps/2)``, with ``k0`` positive for a dispersing wall.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .construction import OrbitBlueprint, defect
from .errors import ConsistencyError, DegeneracyError, DomainError

PARABOLIC_TOL = 1e-9
RESONANCE_TOL = 1e-3
RESONANT_TRACES = (-2.0, -1.0, 0.0, 2.0)


def default_tol() -> float:
    """Parabolic tolerance, overridable through ``BILLIARD_FORGE_TOL``."""
    raw = os.environ.get("BILLIARD_FORGE_TOL")
    if raw is None:
        return PARABOLIC_TOL
    try:
        val = float(raw)
    except ValueError:
        raise DomainError(f"BILLIARD_FORGE_TOL is not a number: {raw!r}") from None
    if not (val > 0 and math.isfinite(val)):
        raise DomainError("BILLIARD_FORGE_TOL must be positive")
    return val


def _half_trace_parts(bp: OrbitBlueprint, R0: float):
    N, tc, t0, t1 = bp.N, bp.tau_c, bp.tau0, bp.tau1
    D = defect(bp)
    g = (N - 1) * tc - 2 * N * t1
    f1 = 1.0 + (2 * N - g * R0) * (2 * D - (tc - 2 * t1) * t0 * R0) / (2 * tc)
    f2 = -1.0 + (2 - (tc - 2 * t1) * R0) * (2 * (tc + N * D) - g * t0 * R0) / (2 * tc)
    return f1, f2


def trace_closed_form(bp: OrbitBlueprint, R0: float, check: bool = True) -> float:
    """Half the trace of the scaffold monodromy.

    Both algebraic factorizations are evaluated; if they disagree beyond
    ``1e-9`` (relative to the size of the terms) a
    :class:`ConsistencyError` is raised.
    """
    f1, f2 = _half_trace_parts(bp, R0)
    if check:
        scale = max(1.0, abs(f1), abs(f2))
        if abs(f1 - f2) > 1e-9 * scale:
            raise ConsistencyError(f"trace factorizations disagree: {f1!r} vs {f2!r}")
    return f1


def trace_factorizations(bp: OrbitBlueprint, R0: float) -> tuple[float, float]:
    return _half_trace_parts(bp, R0)


def quadratic_coefficient(bp: OrbitBlueprint) -> float:
    """Coefficient of ``R0**2`` in half the trace, expanded from the first factorization."""
    N, tc, t0, t1 = bp.N, bp.tau_c, bp.tau0, bp.tau1
    g = (N - 1) * tc - 2 * N * t1
    return g * (tc - 2 * t1) * t0 / (2 * tc)


def quadratic_coefficient_product(bp: OrbitBlueprint) -> float:
    """Same coefficient written through the window roots."""
    w = window_bounds(bp)
    return (2 * bp.N * bp.tau0 / bp.tau_c) / (w.R1 + 2 / bp.tau0) / w.R2


def quadratic_coefficient_lengths(bp: OrbitBlueprint) -> float:
    D = defect(bp)
    t0 = bp.tau0
    return bp.N * t0 / (2 * bp.tau_c) * (t0 - D) * (t0 - bp.tau_c / bp.N - D)


@dataclass(frozen=True)
class EllipticWindows:
    R1: float
    R2: float
    window_low: tuple
    window_high: tuple | None
    case: str
    tau0: float

    def to_dict(self) -> dict:
        return {"R1": self.R1, "R2": self.R2, "window_low": list(self.window_low),
                "window_high": list(self.window_high) if self.window_high else None,
                "case": self.case}


def window_bounds(bp: OrbitBlueprint) -> EllipticWindows:
    """Roots ``R1``, ``R2`` of ``tr M = 2`` and the two elliptic windows.

    ``case`` is ``"item2"`` when ``R2 < 0`` (the trace parabola opens
    downward) and ``"item3"`` when ``R2 > 0``.
    """
    D = defect(bp)
    t0 = bp.tau0
    d1 = t0 - D
    d2 = t0 - bp.tau_c / bp.N - D
    if abs(d1) < 1e-12 or abs(d2) < 1e-12:
        raise DegeneracyError("degenerate window: tau0 coincides with a root denominator")
    R1 = 2.0 / d1 - 2.0 / t0
    R2 = 2.0 / d2
    # tr = -2 at R1 + 2/tau0 and R2 - 2/tau0; the windows are the outer pairs
    # of the four sorted crossings, which swap partners when those two cross
    pts = sorted((R1, R2, R1 + 2.0 / t0, R2 - 2.0 / t0))
    a, b = (pts[0], pts[1]), (pts[2], pts[3])
    low, high = (a, b) if R1 in a else (b, a)
    case = "item2" if R2 < 0 else "item3"
    return EllipticWindows(R1, R2, low, high, case, t0)


@dataclass(frozen=True)
class TraceReport:
    trace: float
    classification: str
    rotation_number: float | None
    resonance_flags: tuple = field(default_factory=tuple)

    @property
    def resonant(self) -> bool:
        return bool(self.resonance_flags)

    def to_dict(self) -> dict:
        return {"trace": self.trace, "classification": self.classification,
                "rotation_number": self.rotation_number,
                "resonance_flags": list(self.resonance_flags)}


def classify(trace: float, tol: float | None = None, resonance_tol: float = RESONANCE_TOL) -> TraceReport:
    """Classify a full monodromy trace.

    Resonances are reported as flags next to the primary class, so a trace
    near ``-1`` reads as elliptic with a ``-1`` flag.
    """
    if tol is None:
        tol = default_tol()
    if not tol > 0:
        raise DomainError("tol must be positive")
    a = abs(trace)
    if a > 2.0 + tol:
        cls = "hyperbolic"
    elif a >= 2.0 - tol:
        cls = "parabolic"
    else:
        cls = "elliptic"
    rho = math.acos(trace / 2.0) / (2 * math.pi) if cls == "elliptic" else None
    flags = tuple(v for v in RESONANT_TRACES if abs(trace - v) <= resonance_tol)
    return TraceReport(float(trace), cls, rho, flags)


def r0_from_k0(bp: OrbitBlueprint, k0: float) -> float:
    if bp.eps <= 0:
        raise DomainError("k0/R0 conversion is undefined for eps = 0")
    return 2.0 * k0 / math.sin(bp.eps / 2)


def k0_from_r0(bp: OrbitBlueprint, R0: float) -> float:
    if bp.eps <= 0:
        raise DomainError("k0/R0 conversion is undefined for eps = 0")
    return R0 * math.sin(bp.eps / 2) / 2.0


def r0_k0_convert(bp: OrbitBlueprint, value: float, direction: str) -> float:
    """Convert between contact curvature and reflection parameter.

    ``direction`` is ``"r0_to_k0"`` or ``"k0_to_r0"``.
    """
    if direction == "r0_to_k0":
        return k0_from_r0(bp, value)
    if direction == "k0_to_r0":
        return r0_from_k0(bp, value)
    raise DomainError(f"unknown direction {direction!r}")


def trace_report(bp: OrbitBlueprint, k0: float, tol: float | None = None) -> TraceReport:
    R0 = r0_from_k0(bp, k0) if bp.eps > 0 else 0.0
    return classify(2.0 * trace_closed_form(bp, R0), tol)


def vertex_r0(bp: OrbitBlueprint) -> float:
    """Abscissa of the extremum of the trace parabola in ``R0``."""
    w = window_bounds(bp)
    # roots of tr = 2 are R1 and R2, the vertex sits halfway
    return 0.5 * (w.R1 + w.R2)
