"""Exception hierarchy for the verifier.

All library-raised errors derive from :class:`IbfifoError` so callers can
catch one base class.  Semantic step failures (bad transition, mismatched
receive, failing zero test, decrement on zero) get their own classes because
the simulators distinguish "no such step" from "step exists but is disabled".
"""

from __future__ import annotations


class IbfifoError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(IbfifoError):
    """A machine, language tuple, or configuration fails a well-formedness check."""


class ParseError(IbfifoError):
    """A textual machine/bounds/regex description cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotBounded(ValidationError):
    """The language is not contained in the star-concatenation of its tuple."""


class EmptyLanguage(ValidationError):
    """The language denotes the empty set."""


class EmptyTupleWord(ValidationError):
    """A tuple word is empty (tuple words must be nonempty)."""


class AlphabetMismatch(ValidationError):
    """The language's alphabet differs from the tuple's alphabet."""


class AlphabetOverlap(ValidationError):
    """A letter is declared on more than one channel."""


class StepError(IbfifoError):
    """Base class for step-level simulation failures."""


class NoSuchTransition(StepError):
    """The requested action/transition does not exist at the current state."""


class ReceiveMismatch(StepError):
    """A receive action exists but the channel head holds a different letter."""


class EmptyChannel(ReceiveMismatch):
    """A receive action was attempted on an empty channel."""


class ZeroTestFailed(StepError):
    """A counter transition's zero-test set contains a nonzero counter."""


class DecrementOnZero(StepError):
    """A decrement was attempted on a counter whose value is zero."""


class SearchBudgetExceeded(IbfifoError):
    """A search ran out of its node budget before reaching a conclusion."""


class UnsupportedQuery(IbfifoError):
    """The requested problem has no decision procedure in this package."""


class InternalError(IbfifoError):
    """An internal invariant was violated (indicates a bug, not bad input)."""
