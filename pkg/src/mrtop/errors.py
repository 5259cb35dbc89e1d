"""Exception hierarchy shared by every mrtop module."""

from __future__ import annotations


class MrtopError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MrtopError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class TauMismatchError(DomainError):
    """An index and a query line were built with different offsets."""


class GeneralPositionError(MrtopError):
    """Input violates the general-position assumption (ties, concurrency).

    ``line_ids`` names the offending dual lines when they are known.
    """

    def __init__(self, message: str, line_ids: tuple = ()):
        if line_ids:
            message = f"{message} (lines: {', '.join(map(str, line_ids))})"
        super().__init__(message)
        self.line_ids = tuple(line_ids)


class IngestError(DomainError):
    """A dataset row could not be parsed or validated."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class IndexFormatError(MrtopError):
    """An index file could not be decoded."""


class VersionMismatchError(IndexFormatError):
    pass


class TruncatedStreamError(IndexFormatError):
    pass


class InvariantViolationError(IndexFormatError):
    """A decoded index breaks one of the structural invariants."""
