"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class TremorlabError(Exception):
    exit_code = 3


class ValidationError(TremorlabError):
    exit_code = 2


class NumericError(TremorlabError):
    exit_code = 3


class SearchError(TremorlabError):
    exit_code = 4


# surface construction
class ClosureViolation(ValidationError):
    pass


class OrientationViolation(ValidationError):
    pass


class ConeAngleMismatch(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class SpecFormatError(ValidationError):
    pass


class NonConvexFlip(NumericError):
    pass


# flows and transverse systems
class StartAtSingularity(ValidationError):
    pass


class TrajectoryTerminated(NumericError):
    """A trajectory met a singularity before the requested time."""


class UncoveredLeaf(NumericError):
    pass


class NonTransverseCrossing(NumericError):
    pass


class ProngHitsSingularity(NumericError):
    pass


# cocycles and tremors
class NonHorizontalBoundary(ValidationError):
    pass


class DegenerateBeyondRepair(NumericError):
    pass


class AtomicCocycle(ValidationError):
    pass


# eigenform locus
class SlitThroughLatticePoint(ValidationError):
    pass


class AperiodicityUnverified(NumericError):
    pass


class SearchExhausted(SearchError):
    pass


class RationalSlope(ValidationError):
    pass


class ColoringInconsistent(NumericError):
    pass


class PeriodicHorizontal(ValidationError):
    pass


# fractal geometry
class Degenerate(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class ChartEscape(NumericError):
    pass
