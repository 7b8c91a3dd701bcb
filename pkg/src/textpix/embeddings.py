"""Word-embedding tables: parsing, normalization statistics, byte quantization.

The table maps each vocabulary word to a float32 vector. Per-dimension
min/max statistics computed across the whole vocabulary drive an affine
quantization of vector components onto [0, 255], three components per RGB
superpixel. Both directions (quantize / dequantize) live here; everything
downstream (rendering, decoding) works on the quantized bytes.

Supported file formats:

* text: one record per line, ``word v_1 ... v_D``, optionally preceded by a
  ``N D`` header line; UTF-8.
* binary: ASCII header ``N D\\n``, then per record a space-terminated UTF-8
  word followed by D little-endian IEEE-754 32-bit floats.
* stats sidecar: one line per dimension, ``j min_j max_j``.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .errors import EmbeddingFormatError

logger = logging.getLogger(__name__)

# float32 survives a decimal round trip at 9 significant digits
_FLOAT_FMT = "%.9g"


@dataclass(frozen=True)
class NormalizationStats:
    """Per-dimension min/max over a vocabulary, used for byte quantization.

    Stored as float32 so the text sidecar round-trips bit-exactly.
    """

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float32)
        maxs = np.asarray(self.maxs, dtype=np.float32)
        if mins.ndim != 1 or mins.shape != maxs.shape:
            raise ValueError("mins and maxs must be 1-d arrays of equal length")
        if np.any(mins > maxs):
            raise ValueError("min_j > max_j for some dimension")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def dim(self) -> int:
        return int(self.mins.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormalizationStats):
            return NotImplemented
        return np.array_equal(self.mins, other.mins) and np.array_equal(self.maxs, other.maxs)


@dataclass(eq=False, repr=False)
class EmbeddingTable:
    """Immutable word -> float32 vector dictionary with normalization stats.

    Insertion order is preserved and is the tie-breaking order for
    nearest-neighbor decoding.
    """

    words: tuple[str, ...]
    vectors: np.ndarray  # (vocab, dim) float32
    stats: NormalizationStats = field(init=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        if len(self.words) != vectors.shape[0]:
            raise ValueError("word count does not match vector count")
        if len(self.words) == 0:
            raise ValueError("empty vocabulary")
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("non-finite vector component")
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self._index = {w: i for i, w in enumerate(self.words)}
        self.stats = compute_normalization(self)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def lookup(self, word: str) -> np.ndarray | None:
        """Return the stored vector for ``word``, or None if out-of-vocabulary.

        Case-sensitive; case policy belongs to the tokenizer.
        """
        i = self._index.get(word)
        return None if i is None else self.vectors[i]

    def index_of(self, word: str) -> int | None:
        return self._index.get(word)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return self.words == other.words and np.array_equal(self.vectors, other.vectors)

    def __repr__(self) -> str:
        return f"EmbeddingTable(vocab={len(self.words)}, dim={self.dim})"

    def digest(self) -> str:
        """Stable content hash (lowercase hex sha256 of the text serialization)."""
        import hashlib

        h = hashlib.sha256()
        for chunk in _iter_text_records(self):
            h.update(chunk.encode("utf-8"))
        return h.hexdigest()


def compute_normalization(table: EmbeddingTable) -> NormalizationStats:
    """Per-dimension extrema across the entire vocabulary.

    min_j <= v_{k,j} <= max_j holds for every stored vector by construction.
    """
    mins = table.vectors.min(axis=0)
    maxs = table.vectors.max(axis=0)
    return NormalizationStats(mins=mins, maxs=maxs)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    # round half away from zero, the fixed rule used everywhere in this package
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize_matrix(vectors: np.ndarray, stats: NormalizationStats, d: int) -> np.ndarray:
    """Quantize rows of ``vectors`` to byte matrices using the first d components.

    Vectorized form of :func:`quantize`; returns an (n, d) uint8 array.
    """
    _check_d(d, vectors.shape[-1], stats)
    v = np.asarray(vectors, dtype=np.float64)[..., :d]
    mins = stats.mins[:d].astype(np.float64)
    maxs = stats.maxs[:d].astype(np.float64)
    span = maxs - mins
    degenerate = span == 0
    span_safe = np.where(degenerate, 1.0, span)
    scaled = (v - mins) / span_safe * 255.0
    q = _round_half_away(scaled)
    q = np.clip(q, 0, 255)
    q = np.where(degenerate, 0.0, q)
    return q.astype(np.uint8)


def quantize(v: np.ndarray, stats: NormalizationStats, d: int) -> np.ndarray:
    """Map the first d components of ``v`` onto bytes in [0, 255].

    bytes[j] = round((v_j - min_j) / (max_j - min_j) * 255), rounding half
    away from zero; a degenerate dimension (max_j == min_j) maps to 0.

    Args:
        v: real vector with at least d components.
        stats: normalization extrema covering dimensions 0..d-1.
        d: number of components to use; must be a positive multiple of 3.

    Returns:
        uint8 array of length d.
    """
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("quantize expects a single vector; use quantize_matrix for batches")
    return quantize_matrix(v[np.newaxis, :], stats, d)[0]


def dequantize(q: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Invert :func:`quantize` up to half a quantization step.

    v_j = min_j + bytes[j] / 255 * (max_j - min_j); degenerate dimensions
    return min_j exactly.
    """
    q = np.asarray(q)
    d = q.shape[-1]
    if stats.dim < d:
        raise ValueError(f"stats cover {stats.dim} dimensions, got {d} bytes")
    mins = stats.mins[:d].astype(np.float64)
    maxs = stats.maxs[:d].astype(np.float64)
    return mins + q.astype(np.float64) / 255.0 * (maxs - mins)


def _check_d(d: int, vector_len: int, stats: NormalizationStats) -> None:
    if d <= 0 or d % 3 != 0:
        raise ValueError(f"feature count must be a positive multiple of 3, got {d}")
    if d > vector_len:
        raise ValueError(f"feature count {d} exceeds vector length {vector_len}")
    if stats.dim < d:
        raise ValueError(f"stats cover {stats.dim} dimensions, need {d}")


# ---------------------------------------------------------------------------
# text format


def parse_embedding_text(source: BinaryIO | bytes | str | Path) -> EmbeddingTable:
    """Parse the whitespace-separated text embedding format.

    Accepts either a leading ``N D`` header line (exactly two integer tokens)
    followed by N records, or headerless ``word v_1 ... v_D`` lines with D
    fixed by the first record. Note the header heuristic makes a headerless
    one-dimensional table whose first word is an integer ambiguous; write a
    header for such data.

    Raises:
        EmbeddingFormatError: wrong component count (with line number),
            duplicate word, non-finite value, or empty vocabulary.
    """
    lines = _read_text_lines(source)

    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    expected_n: int | None = None
    dim: int | None = None

    start = 0
    if lines:
        head = lines[0][1].split()
        if len(head) == 2 and all(_is_int(t) for t in head):
            expected_n, dim = int(head[0]), int(head[1])
            if expected_n <= 0 or dim <= 0:
                raise EmbeddingFormatError("header counts must be positive", line=lines[0][0])
            start = 1

    for lineno, text in lines[start:]:
        fields = text.split()
        if not fields:
            continue  # blank line
        word, comps = fields[0], fields[1:]
        if dim is None:
            if not comps:
                raise EmbeddingFormatError("record has no vector components", line=lineno)
            dim = len(comps)
        if len(comps) != dim:
            raise EmbeddingFormatError(
                f"expected {dim} components, found {len(comps)}", line=lineno
            )
        if word in seen:
            raise EmbeddingFormatError(f"duplicate word {word!r}", line=lineno)
        try:
            vec = np.array([float(c) for c in comps], dtype=np.float32)
        except ValueError as exc:
            raise EmbeddingFormatError(f"bad float: {exc}", line=lineno) from None
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"non-finite component in record {word!r}", line=lineno)
        seen.add(word)
        words.append(word)
        rows.append(vec)

    if not words:
        raise EmbeddingFormatError("empty vocabulary")
    if expected_n is not None and len(words) != expected_n:
        raise EmbeddingFormatError(
            f"header promises {expected_n} records, found {len(words)}"
        )
    return EmbeddingTable(words=tuple(words), vectors=np.vstack(rows))


def _iter_text_records(table: EmbeddingTable) -> Iterable[str]:
    yield f"{len(table)} {table.dim}\n"
    for word, vec in zip(table.words, table.vectors):
        comps = " ".join(_FLOAT_FMT % float(x) for x in vec)
        yield f"{word} {comps}\n"


def write_embedding_text(table: EmbeddingTable, sink: BinaryIO | Path | str) -> None:
    """Write the table in text format with an ``N D`` header.

    Components carry 9 significant digits, so re-parsing reproduces the
    float32 vectors bit-exactly.
    """
    data = "".join(_iter_text_records(table)).encode("utf-8")
    _write_bytes(sink, data)


# ---------------------------------------------------------------------------
# binary format


def parse_embedding_binary(
    source: BinaryIO | bytes | str | Path, *, strict: bool = True
) -> EmbeddingTable:
    """Parse the binary embedding format.

    Header is an ASCII ``N D\\n`` line; each record is a space-terminated
    UTF-8 word followed by D little-endian float32 values. Leading newline
    bytes before a word are skipped (some third-party writers emit them).

    Args:
        source: stream, bytes, or path.
        strict: when True (default), trailing bytes after the N-th record are
            an error; when False they produce a warning and are ignored.

    Raises:
        EmbeddingFormatError: truncation (with byte offset), non-positive
            header counts, duplicate word, or non-finite value.
    """
    data = _read_all_bytes(source)

    nl = data.find(b"\n")
    if nl < 0:
        raise EmbeddingFormatError("missing header line", offset=0)
    head = data[:nl].split()
    if len(head) != 2 or not all(_is_int(t.decode("ascii", "replace")) for t in head):
        raise EmbeddingFormatError("header must be 'N D'", offset=0)
    n, dim = int(head[0]), int(head[1])
    if n <= 0 or dim <= 0:
        raise EmbeddingFormatError(f"header counts must be positive, got N={n} D={dim}")

    pos = nl + 1
    rec_bytes = 4 * dim
    words: list[str] = []
    rows = np.empty((n, dim), dtype=np.float32)
    seen: set[str] = set()

    for i in range(n):
        while pos < len(data) and data[pos : pos + 1] in (b"\n", b"\r"):
            pos += 1
        sp = data.find(b" ", pos)
        if sp < 0:
            raise EmbeddingFormatError(
                f"stream truncated while reading word {i + 1} of {n}", offset=pos
            )
        try:
            word = data[pos:sp].decode("utf-8")
        except UnicodeDecodeError:
            raise EmbeddingFormatError(f"word {i + 1} is not valid UTF-8", offset=pos) from None
        if not word:
            raise EmbeddingFormatError(f"empty word in record {i + 1}", offset=pos)
        pos = sp + 1
        if pos + rec_bytes > len(data):
            raise EmbeddingFormatError(
                f"stream truncated in vector of word {word!r}", offset=pos
            )
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=pos)
        pos += rec_bytes
        if word in seen:
            raise EmbeddingFormatError(f"duplicate word {word!r}")
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"non-finite component in record {word!r}")
        seen.add(word)
        words.append(word)
        rows[i] = vec

    if pos != len(data):
        msg = f"{len(data) - pos} trailing bytes after {n} records"
        if strict:
            raise EmbeddingFormatError(msg, offset=pos)
        logger.warning("%s (ignored)", msg)

    return EmbeddingTable(words=tuple(words), vectors=rows)


def write_embedding_binary(table: EmbeddingTable, sink: BinaryIO | Path | str) -> None:
    """Write the table in binary format (header, then word + float32 block)."""
    buf = io.BytesIO()
    buf.write(f"{len(table)} {table.dim}\n".encode("ascii"))
    for word, vec in zip(table.words, table.vectors):
        buf.write(word.encode("utf-8"))
        buf.write(b" ")
        buf.write(vec.astype("<f4").tobytes())
    _write_bytes(sink, buf.getvalue())


# ---------------------------------------------------------------------------
# stats sidecar


def write_stats(stats: NormalizationStats, sink: BinaryIO | Path | str) -> None:
    """Write the ``j min_j max_j`` sidecar."""
    lines = [
        f"{j} {_FLOAT_FMT % float(stats.mins[j])} {_FLOAT_FMT % float(stats.maxs[j])}\n"
        for j in range(stats.dim)
    ]
    _write_bytes(sink, "".join(lines).encode("ascii"))


def read_stats(source: BinaryIO | bytes | str | Path) -> NormalizationStats:
    """Read a stats sidecar written by :func:`write_stats`."""
    mins: list[float] = []
    maxs: list[float] = []
    for lineno, text in _read_text_lines(source):
        fields = text.split()
        if not fields:
            continue
        if len(fields) != 3:
            raise EmbeddingFormatError("expected 'j min max'", line=lineno)
        j = int(fields[0])
        if j != len(mins):
            raise EmbeddingFormatError(f"dimension index {j} out of order", line=lineno)
        lo, hi = float(fields[1]), float(fields[2])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise EmbeddingFormatError("non-finite stat", line=lineno)
        mins.append(lo)
        maxs.append(hi)
    if not mins:
        raise EmbeddingFormatError("empty stats sidecar")
    return NormalizationStats(
        mins=np.array(mins, dtype=np.float32), maxs=np.array(maxs, dtype=np.float32)
    )


def stats_digest(stats: NormalizationStats) -> str:
    """Lowercase hex sha256 of the sidecar serialization."""
    import hashlib

    buf = io.BytesIO()
    write_stats(stats, buf)
    return hashlib.sha256(buf.getvalue()).hexdigest()


# ---------------------------------------------------------------------------
# small I/O helpers


def _is_int(token: str) -> bool:
    return token.isdigit() or (token.startswith("-") and token[1:].isdigit())


def _read_all_bytes(source: BinaryIO | bytes | str | Path) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def _read_text_lines(source) -> list[tuple[int, str]]:
    """Decode a byte source as UTF-8 and return (1-based line number, text) pairs."""
    raw = _read_all_bytes(source)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EmbeddingFormatError(f"not valid UTF-8: {exc}") from None
    return list(enumerate(text.splitlines(), start=1))


def _write_bytes(sink: BinaryIO | Path | str, data: bytes) -> None:
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)
