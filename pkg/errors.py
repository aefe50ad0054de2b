"""
Exception hierarchy for demolink.

Every error carries a short machine-parseable ``code`` that the CLI prints
next to the human message.
"""

from typing import Optional


class DemolinkError(Exception):
    """Base class for all errors raised by demolink."""

    code = "ERROR"

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class LengthError(DemolinkError):
    """A series is too short for the requested window or lag."""

    code = "LENGTH"


class DomainError(DemolinkError):
    """A value lies outside the domain of an operation (e.g. log of zero)."""

    code = "DOMAIN"


class AlignmentError(DemolinkError):
    """Two series do not overlap enough to be paired."""

    code = "ALIGNMENT"


class AgeRangeError(DemolinkError):
    code = "AGE_RANGE"


class SingularityError(DemolinkError):
    """A design or moment matrix is rank deficient."""

    code = "SINGULAR"


class EigenSolveError(SingularityError):
    code = "EIGEN"


class DegenerateMonthError(DemolinkError):
    code = "DEGENERATE_MONTH"


class SpecError(DemolinkError):
    """Invalid parameters for a test, preset or synthetic generator."""

    code = "SPEC"


class ConfigError(DemolinkError):
    code = "CONFIG"


class ValidationError(DemolinkError):
    """Input data violates its schema or invariants."""

    code = "VALIDATION"


class GapError(ValidationError):
    code = "GAP"


class ParseError(ValidationError):
    """A row of an input file could not be parsed."""

    code = "PARSE"

    def __init__(self, path: str, line: Optional[int], message: str) -> None:
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line


class OutputError(DemolinkError):
    """The output file could not be written."""

    code = "IO"
