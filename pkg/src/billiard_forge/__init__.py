"""Billiard tables near the folded flower with stable periodic orbits."""

from .construction import (
    OrbitBlueprint,
    admissible_tau0,
    defect,
    derive_blueprint,
    eps_max,
    orbit_points,
    scaffold_orbit,
)
from .dynamics import (
    PhasePoint,
    billiard_step,
    monodromy_fd,
    monodromy_product,
    reflect,
    trace_orbit,
)
from .errors import (
    BilliardForgeError,
    ClearanceError,
    ConsistencyError,
    CornerError,
    DegeneracyError,
    DomainError,
    GeometryError,
    GrazingError,
    RescaleError,
    SelectionError,
    SynthesisError,
    ValidationError,
    VerificationError,
)
from .gamma import (
    GammaProfile,
    build_table,
    curvature_report,
    kappa_star,
    pick_k0,
    rescale_epsilon,
    synthesize,
    tau0_window_convex,
)
from .geometry import (
    ArcSegment,
    CurvatureProfile,
    IntrinsicCurve,
    LineSegment,
    Table,
    circle_table,
    curve_from_curvature,
    folded_flower,
    ray_intersect,
)
from .stability import (
    EllipticWindows,
    TraceReport,
    classify,
    r0_k0_convert,
    trace_closed_form,
    window_bounds,
)
from .tablespec import TableSpecError, emit_tablespec, parse_tablespec
from .verification import (
    IslandProbeReport,
    TwistReport,
    island_probe,
    rotation_number,
    twist_estimate,
    verify_periodic,
)

__version__ = "0.1.0"

__all__ = [
    "OrbitBlueprint",
    "admissible_tau0",
    "defect",
    "derive_blueprint",
    "eps_max",
    "orbit_points",
    "scaffold_orbit",
    "PhasePoint",
    "billiard_step",
    "monodromy_fd",
    "monodromy_product",
    "reflect",
    "trace_orbit",
    "BilliardForgeError",
    "ClearanceError",
    "ConsistencyError",
    "CornerError",
    "DegeneracyError",
    "DomainError",
    "GeometryError",
    "GrazingError",
    "RescaleError",
    "SelectionError",
    "SynthesisError",
    "ValidationError",
    "VerificationError",
    "GammaProfile",
    "build_table",
    "curvature_report",
    "kappa_star",
    "pick_k0",
    "rescale_epsilon",
    "synthesize",
    "tau0_window_convex",
    "ArcSegment",
    "CurvatureProfile",
    "IntrinsicCurve",
    "LineSegment",
    "Table",
    "circle_table",
    "curve_from_curvature",
    "folded_flower",
    "ray_intersect",
    "EllipticWindows",
    "TraceReport",
    "classify",
    "r0_k0_convert",
    "trace_closed_form",
    "window_bounds",
    "IslandProbeReport",
    "TwistReport",
    "island_probe",
    "rotation_number",
    "twist_estimate",
    "verify_periodic",
    "TableSpecError",
    "emit_tablespec",
    "parse_tablespec",
]
