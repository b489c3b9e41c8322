"""Exception hierarchy shared by every omq_rewriter module.

Library code raises these; only the command line maps them to exit codes.
"""

from dataclasses import dataclass


class OmqError(ValueError):
    """Base class for all errors raised by omq_rewriter."""


@dataclass(frozen=True)
class SourceSpan:
    """Position of a token in an input file (1-based)."""

    file: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"line and column must be >= 1, got {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class ParseError(OmqError):
    """Malformed native-format input."""

    def __init__(self, message: str, span: SourceSpan) -> None:
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class NotTreeShapedError(OmqError):
    """A tree-shaped CQ was required."""


class UnsupportedQueryError(OmqError):
    """Boolean or non-rooted CQs, or a strategy that cannot handle the query."""


class ArityError(OmqError):
    """Answer tuples or answer-variable lists of mismatching length."""


class PreconditionError(OmqError):
    """An operation was called outside its documented precondition."""


class ReductionError(OmqError):
    """Input to a reduction translation is not conformant / not a derivative."""


class ConfigError(OmqError):
    """Invalid run profile, bench case or budget."""
