"""Exception hierarchy.

Every error raised on purpose by the package derives from EqDegreeError, so the
CLI can map families of failures onto exit codes.
"""


class EqDegreeError(Exception):
    pass


class ValidationError(EqDegreeError):
    """Input data (config, map, group) fails a structural check."""


# groups
class CapExceeded(ValidationError):
    pass


class NotOrthogonal(ValidationError):
    pass


class AmbiguousIsotropy(EqDegreeError):
    pass


# domains and charts
class DimensionMismatch(ValidationError):
    pass


class EmptyDomain(ValidationError):
    pass


class ResolutionTooCoarse(EqDegreeError):
    pass


class OutsideChart(EqDegreeError):
    pass


# maps
class OutsideDomain(EqDegreeError):
    pass


class NotInvariantSubspace(ValidationError):
    pass


class ExpressionSyntaxError(ValidationError):
    pass


# degree computation
class DegenerateZero(EqDegreeError):
    def __init__(self, message, point=None, det=None):
        super().__init__(message)
        self.point = point
        self.det = det


class DivisibilityViolation(EqDegreeError):
    pass


class Singular(EqDegreeError):
    pass


class ZeroAtEndpoint(EqDegreeError):
    pass


class BoundaryTooClose(EqDegreeError):
    pass


class StepTooCoarse(EqDegreeError):
    pass


# realization and otopies
class NoRoom(EqDegreeError):
    pass


class Overlap(EqDegreeError):
    pass


class NoValidRadius(EqDegreeError):
    pass


class NotAnOtopy(EqDegreeError):
    def __init__(self, message, t=None, point=None):
        super().__init__(message)
        self.t = t
        self.point = point
