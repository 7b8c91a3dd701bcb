"""Document tokenization and vocabulary filtering.

Tokens are maximal runs of Unicode letters and digits; everything else
separates. Text is lowercased by default (``keep_case=True`` opts out for
corpora where case carries signal).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .embeddings import EmbeddingTable

# \w minus underscore: Unicode letters, digits and numeric characters
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Document:
    """One labeled input document."""

    id: str
    label: int | str
    text: str


@dataclass(frozen=True)
class TokenSequence:
    """Ordered tokens in reading order; oov_count is filled by vocabulary filtering."""

    tokens: tuple[str, ...]
    oov_count: int = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def tokenize(doc: Document | str, *, keep_case: bool = False) -> TokenSequence:
    """Split a document's text into tokens in reading order.

    Empty text yields an empty sequence. Deterministic: the same text always
    produces the same tokens.
    """
    text = doc.text if isinstance(doc, Document) else doc
    if not keep_case:
        text = text.lower()
    return TokenSequence(tokens=tuple(_TOKEN_RE.findall(text)))


def filter_in_vocabulary(seq: TokenSequence, table: EmbeddingTable) -> TokenSequence:
    """Drop tokens absent from the table, preserving order; count the drops."""
    kept = tuple(t for t in seq.tokens if t in table)
    return TokenSequence(tokens=kept, oov_count=len(seq.tokens) - len(kept))
