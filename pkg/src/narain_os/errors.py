"""Exception hierarchy shared by all modules."""


class NarainError(Exception):
    """Base class for library errors."""


class NotSymmetric(NarainError):
    pass


class NotEven(NarainError):
    pass


class Degenerate(NarainError):
    pass


class RankMismatch(NarainError):
    pass


class WrongLattice(NarainError):
    pass


class NonPositiveR(NarainError):
    pass


class InvalidPolarization(NarainError):
    pass


class IndefiniteMetric(NarainError):
    pass


class CapExceeded(NarainError):
    pass


class ZeroPoint(NarainError):
    pass


class CutoffTooSmall(NarainError):
    pass


class RecursionDepthExceeded(NarainError):
    pass


class NotRadiallyOrdered(NarainError):
    pass


class ChargeOverflow(NarainError):
    pass


class CoincidingPoints(NarainError):
    pass


class PointSentToInfinity(NarainError):
    pass


class PoleHit(NarainError):
    pass


class NoDirectionFound(NarainError):
    pass


class PreconditionViolated(NarainError):
    pass


class SupportViolation(NarainError):
    pass


class DegenerateFit(NarainError):
    pass


class BadModelFile(NarainError):
    pass


class InternalAssertion(NarainError):
    pass


class CheckFailed(NarainError):
    pass
