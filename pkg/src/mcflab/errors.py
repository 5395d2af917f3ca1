"""Exception hierarchy shared by all mcflab modules."""


class McfLabError(Exception):
    """Base class for every error raised by mcflab."""


# geometry
class GeometryError(McfLabError, ValueError):
    pass


class NonFinite(GeometryError):
    pass


class DegenerateRadius(GeometryError):
    pass


class NotClosed(GeometryError):
    pass


class NonPositiveH(GeometryError):
    pass


# flow
class FlowError(McfLabError):
    pass


class CFLViolation(FlowError):
    pass


class RadiusCollapse(FlowError):
    pass


class HeightTooSmall(FlowError, ValueError):
    pass


# spacetime
class SpacetimeError(McfLabError):
    pass


class EmptyWindow(SpacetimeError):
    pass


class SeedNotCovered(SpacetimeError):
    pass


# solitons
class SolitonError(McfLabError):
    pass


class StepTooLarge(SolitonError):
    pass


class NonConvex(SolitonError):
    pass


# estimate audits
class AuditError(McfLabError):
    pass


class NotPinched(AuditError):
    pass


class EmptyRegion(AuditError):
    pass


class BallNotContained(AuditError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InitialPinchFails(AuditError):
    pass


class BetaNonPositive(AuditError):
    pass


# cli
class ConfigError(McfLabError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
