"""Exception hierarchy for nsreg.

Every error raised on purpose by the library derives from NsregError so the
CLI can map it to an exit status. ``ValidationError`` subclasses signal bad
input (exit 2); everything else is a runtime failure (exit 1).
"""


class NsregError(Exception):
    """Base class for library errors."""


class ValidationError(NsregError, ValueError):
    """Input outside an operation's domain."""


class DomainError(ValidationError):
    pass


class DegenerateDenominator(DomainError):
    pass


class ConfigError(ValidationError):
    pass


class InternalContradiction(NsregError):
    """A selected exponent violates a constraint it was chosen to satisfy."""


class GridTooLarge(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class CylinderOutOfDomain(OutOfDomain):
    pass


class WindowOutOfDomain(OutOfDomain):
    pass


class QOutOfRange(ValidationError):
    pass


class FormatError(ValidationError):
    """Malformed NSFD container; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VersionError(FormatError):
    pass


class WitnessMissing(NsregError):
    pass


class DegenerateNorm(NsregError):
    pass


class DegenerateRatio(NsregError):
    """A ratio's denominator vanished while its numerator did not."""


class Inconclusive(NsregError):
    pass
