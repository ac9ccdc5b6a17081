"""Exception taxonomy shared across the package.

Every error raised on purpose derives from :class:`LrscaError`, so callers
(and the CLI exit-code mapping) can distinguish domain failures from bugs.
"""


class LrscaError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatch(LrscaError):
    """Operands have incompatible dimensions."""


class DegenerateInput(LrscaError):
    """Input is degenerate for the requested operation (e.g. a zero matrix)."""


class RankDeficient(LrscaError):
    """A matrix required to have full column rank does not."""


class NotInSpan(LrscaError):
    """A vector that must lie in a column space does not."""


class NotCovered(LrscaError):
    """A data column lies outside the span of the candidate dictionary."""


class DegenerateArrangement(LrscaError):
    """A hyperplane arrangement does not pin a unique dictionary."""


class SizeLimit(LrscaError):
    """An enumeration cap would be exceeded; failing loudly instead of approximating."""


class CapExceeded(LrscaError):
    """A configured work cap was hit; ``partial`` carries whatever was found."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class RetryExhausted(LrscaError):
    """A verify-and-resample loop failed to produce a valid draw."""


class InvalidR(LrscaError):
    """The requested rank is outside the construction's admissible range."""


class InvalidParams(LrscaError):
    """Parameters violate a documented precondition."""


class ExactBackendRequired(LrscaError):
    """The operation is only meaningful in exact rational arithmetic."""


class NotIdentified(LrscaError):
    """Recovery could not certify enough hyperplanes."""


class InvalidDecomposition(LrscaError):
    """An assembled decomposition failed validation."""


class AmbiguousCover(LrscaError):
    """More certified hyperplanes than dictionary slots; input violates the model."""
