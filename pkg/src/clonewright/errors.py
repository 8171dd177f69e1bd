"""Error types shared across the toolkit."""

from __future__ import annotations


class ClonewrightError(Exception):
    """Base class for all domain errors (CLI maps these to exit code 1)."""


class SourceError(ClonewrightError):
    """An error anchored to a source location."""

    def __init__(self, message: str, span=None):
        self.span = span
        if span is not None:
            message = f"{span.file}:{span.render()}: {message}"
        super().__init__(message)


class LexError(SourceError):
    pass


class ParseError(SourceError):
    def __init__(self, message: str, span=None, expected: tuple[str, ...] = ()):
        self.expected = expected
        if expected:
            message = f"{message} (expected one of: {', '.join(expected)})"
        super().__init__(message, span)


class BindingError(SourceError):
    pass


class RefactorError(ClonewrightError):
    pass


class SelectionError(ClonewrightError):
    """A selection does not cover a whole expression subsequence."""

    def __init__(self, message: str, suggestion=None):
        self.suggestion = suggestion
        super().__init__(message)
