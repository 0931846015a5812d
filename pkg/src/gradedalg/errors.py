"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: parse/input-file problems are code 2,
violated preconditions and domain errors are code 3, failed verifications
exit 1 without raising.
"""


class GradedAlgError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class InvalidInput(GradedAlgError):
    """An argument violates an operation's precondition."""


class TruncationExceeded(InvalidInput):
    """A coefficient beyond the stored truncation was requested."""


class NotAnEnvelopingSeries(GradedAlgError):
    """A logarithm produced non-integral (or negative) dimension counts."""


class NotQuadratic(GradedAlgError):
    """Koszul duality requires all relations to be homogeneous of degree 2."""


class NotAComplex(GradedAlgError):
    """The differentials of a purported chain complex do not square to zero."""


class NonCommutativeInput(GradedAlgError):
    """A Koszul-complex operation was given a non-polynomial presentation."""


class PreconditionFailed(GradedAlgError):
    """A stated mathematical precondition does not hold for the input."""


class ParseError(GradedAlgError):
    """Syntax or semantic error in an input file; carries line/column."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", col {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class InhomogeneousRelation(ParseError):
    """A relation mixes terms of different degree (or of different sign)."""
