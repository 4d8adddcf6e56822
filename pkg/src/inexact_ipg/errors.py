"""Exception types raised across the package."""


class IpgError(Exception):
    """Base class for all errors raised by this package."""


class EmptyCloud(IpgError, ValueError):
    pass


class DuplicatePoints(IpgError, ValueError):
    pass


class DegenerateCloud(IpgError, ValueError):
    pass


class DimensionMismatch(IpgError, ValueError):
    pass


class NegativeEpsilon(IpgError, ValueError):
    pass


class NonpositivePrecision(IpgError, ValueError):
    pass


class ZeroDimension(IpgError, ValueError):
    pass


class AmbientTooSmall(IpgError, ValueError):
    pass


class MissingTree(IpgError, ValueError):
    pass


class BadIteration(IpgError, ValueError):
    pass


class NonpositiveStep(IpgError, ValueError):
    pass


class GammaOutOfRange(IpgError, ValueError):
    pass


class TooLargeToEnumerate(IpgError, ValueError):
    pass


class XStarNotInModel(IpgError, ValueError):
    pass


class StepOutOfRange(IpgError, ValueError):
    pass


class ConditionViolated(IpgError, ValueError):
    """A convergence precondition does not hold; the message names the inequality."""


class EpsilonTooLarge(IpgError, ValueError):
    pass


class RateOutOfRange(IpgError, ValueError):
    pass


class ParseError(IpgError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SpecError(IpgError, ValueError):
    """Invalid experiment or oracle specification."""
