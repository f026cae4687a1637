"""Exception hierarchy shared across the toolkit.

Exit-code mapping for the CLI: ValidationError (and subclasses) -> 1,
TransportError (and subclasses) -> 2.
"""

from __future__ import annotations


class XiclError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(XiclError):
    """Input, schema, or configuration violates a documented contract."""


class ParseError(ValidationError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingLabelSetError(XiclError):
    """No label strings exist for this (task, language); callers decide fallback."""

    def __init__(self, language: str, task: str | None = None):
        self.language = language
        self.task = task
        detail = f"no label set for language {language!r}"
        if task:
            detail += f" in task {task!r}"
        super().__init__(detail)


class UndefinedCorrelationError(XiclError):
    """Pearson correlation is undefined (zero variance in a series)."""


class TransportError(XiclError):
    """A remote endpoint could not be reached."""


class ProtocolError(TransportError):
    """The remote endpoint answered, but the payload violates the wire protocol."""


class PromptTooLargeError(ValidationError):
    """Assembled prompt exceeds the configured byte limit."""
