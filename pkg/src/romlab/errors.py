"""Exception hierarchy shared by all romlab modules."""


class RomlabError(Exception):
    """Base class for every error raised by romlab."""


class ValidationError(RomlabError, ValueError):
    """An argument or data object violates a documented invariant."""


class DimensionError(ValidationError):
    """Array shapes or lengths do not agree."""


class RankError(ValidationError):
    """A requested rank exceeds the numerical rank of the data."""


class CapabilityError(RomlabError):
    """The discretization lacks an operator required by the caller."""


class DivergenceError(RomlabError, ArithmeticError):
    """A time integration or training run produced non-finite values.

    ``step`` holds the offending step (or epoch) index when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EvaluationError(RomlabError, ArithmeticError):
    """A closure model returned non-finite predictions."""


class SearchError(RomlabError):
    """Every point of a hyperparameter grid failed."""

    def __init__(self, message, outcomes=None):
        super().__init__(message)
        self.outcomes = outcomes or []


class ParseError(RomlabError, ValueError):
    """A file or expression could not be parsed."""


class HeaderError(ParseError):
    """Missing magic string or malformed text header."""


class TruncatedError(ParseError):
    """The binary payload is shorter than the header announces."""


class ChecksumError(ParseError):
    """The stored payload checksum does not match the payload."""
