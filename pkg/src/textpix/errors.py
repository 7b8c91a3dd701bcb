"""Exception types shared across the package.

Parameter validation raises plain ValueError; these classes cover problems
with external data (embedding files, PNG streams, corpus sources).
"""

from __future__ import annotations


class TextpixError(Exception):
    """Base class for errors raised on bad external data."""


class EmbeddingFormatError(TextpixError):
    """Malformed embedding file. Carries a line number or byte offset when known."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif offset is not None:
            message = f"byte offset {offset}: {message}"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ImageFormatError(TextpixError):
    """Unreadable or unsupported image stream."""


class CorpusFormatError(TextpixError):
    """Malformed corpus source (CSV row, missing directory, bad field spec)."""


class EncodeError(TextpixError):
    """A record could not be encoded or written during a corpus run."""
