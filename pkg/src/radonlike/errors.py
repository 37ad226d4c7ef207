"""Exception types shared across the package."""


class RadonlikeError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RadonlikeError):
    pass


class DependentInput(RadonlikeError):
    pass


class ChainViolation(RadonlikeError):
    pass


class SingularBasis(RadonlikeError):
    pass


class RankDeficient(RadonlikeError):
    pass


class NonOrthonormalBases(RadonlikeError):
    pass


class TraceViolation(RadonlikeError):
    pass


class NotNondegenerate(RadonlikeError):
    pass


class BadDimensions(RadonlikeError):
    pass


class ParseError(RadonlikeError):
    pass


class EmptyGuard(RadonlikeError):
    pass


class ZeroMeasure(RadonlikeError):
    pass


class NonUnitDeterminant(RadonlikeError):
    pass


class InsufficientSamples(RadonlikeError):
    pass


class PoleError(RadonlikeError):
    """Evaluation of a rational function too close to a zero of its denominator."""
