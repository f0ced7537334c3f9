"""Exception types shared across the package."""


class SigmaOptError(Exception):
    """Base class for all package errors."""


class DomainError(SigmaOptError):
    """Scalar or vector argument outside the mathematical domain of an operation."""


class InvalidDimensions(SigmaOptError):
    """Shape or index-set arguments are inconsistent."""


class NotPositiveDefinite(SigmaOptError):
    """A matrix required to be SPD failed factorization (after the shift retry)."""


class OutOfDomain(SigmaOptError):
    """Iterate left the objective's open domain (Poisson margins must stay positive)."""


class NoFeasibleStart(SigmaOptError):
    """The feasible-start heuristic could not produce a strictly feasible point."""


class LineSearchFailed(SigmaOptError):
    """Backtracking exhausted its budget or was handed a non-descent direction."""


class MissingNewtonDecrement(SigmaOptError):
    """Full-decrement direction selection requires the Newton decrement."""


class ParseError(SigmaOptError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonAscendingIndexError(ParseError):
    """libsvm feature indices must be strictly ascending within a line."""


class RaggedRows(ParseError):
    """CSV rows have inconsistent lengths."""


class InfeasibleSynthesis(SigmaOptError):
    """Could not find a ground-truth weight vector with strictly positive margins."""
