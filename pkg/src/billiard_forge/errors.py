"""Exception hierarchy shared by all modules."""


class BilliardForgeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BilliardForgeError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ValidationError(BilliardForgeError, ValueError):
    """An object failed a structural check (knot order, closure, ...)."""


class DegeneracyError(BilliardForgeError, ArithmeticError):
    """A denominator or determinant vanished within tolerance."""


class ConsistencyError(BilliardForgeError):
    """Two independent evaluations of the same quantity disagree."""


class GeometryError(BilliardForgeError):
    """A ray/boundary query has no valid answer."""


class GrazingError(GeometryError):
    """The trajectory meets the boundary tangentially."""


class CornerError(GeometryError):
    """The trajectory hits a corner where the normal is undefined."""

    def __init__(self, message, segment=None, s=None, one_sided=None):
        super().__init__(message)
        self.segment = segment
        self.s = s
        self.one_sided = one_sided


class ClearanceError(GeometryError):
    """The boundary component intersects the periodic orbit away from its contacts."""

    def __init__(self, message, segment=None, s=None, step=None):
        super().__init__(message)
        self.segment = segment
        self.s = s
        self.step = step


class SynthesisError(BilliardForgeError):
    """A boundary component could not be built with the requested properties."""


class SelectionError(SynthesisError):
    """No admissible contact curvature exists in the requested window."""


class RescaleError(SynthesisError):
    """A rescaled boundary component leaves its elliptic window."""


class VerificationError(BilliardForgeError):
    """A numerical verification did not meet its tolerance."""
