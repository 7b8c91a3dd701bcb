"""Inverse pipeline: superpixel colors back to quantized vectors and words.

Decoding reads the mean color of each P x P superpixel block at the plan's
placements, reassembles the byte vectors, and maps each one to the nearest
vocabulary word by Euclidean distance in quantized byte space. That metric
matches what a downstream classifier sees on the rendered image; distances
on the raw float vectors would not.

On a clean rendered image the extraction is exact, so any vocabulary whose
quantized vectors are collision-free decodes back to the placed tokens with
distance 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .embeddings import EmbeddingTable, NormalizationStats, quantize_matrix
from .layout import EncodingParams, LayoutPlan, word_geometry
from .raster import EncodedImage


@dataclass(frozen=True)
class DecodedDocument:
    """Recovered (word, distance) pairs in placement order."""

    tokens: tuple[tuple[str, float], ...]
    mean_distance: float

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.tokens)


class QuantizedIndex:
    """Vocabulary quantized once, queried many times.

    The query path uses the expansion |q - m|^2 = |q|^2 - 2 q.m + |m|^2 with
    float64 matmuls; all quantities are small integers, so the arithmetic is
    exact and ties resolve to the earliest-inserted word, same as a linear
    scan.
    """

    def __init__(self, table: EmbeddingTable, d: int, *, stats: NormalizationStats | None = None):
        if len(table) == 0:
            raise ValueError("empty embedding table")
        self.table = table
        self.d = d
        self.stats = stats if stats is not None else table.stats
        self.matrix = quantize_matrix(table.vectors, self.stats, d)
        self._m = self.matrix.astype(np.float64)
        self._m_sq = (self._m * self._m).sum(axis=1)

    def nearest(self, q: np.ndarray) -> tuple[str, float]:
        """Nearest vocabulary word to one quantized vector."""
        word, dist = self.nearest_many(np.asarray(q)[np.newaxis, :])[0]
        return word, dist

    def nearest_many(self, queries: np.ndarray) -> list[tuple[str, float]]:
        """Nearest vocabulary word for each row of a (n, d) byte matrix."""
        qf = np.asarray(queries, dtype=np.float64)
        if qf.ndim != 2 or qf.shape[1] != self.d:
            raise ValueError(f"queries must be (n, {self.d})")
        sq = (qf * qf).sum(axis=1)
        dists = sq[:, np.newaxis] - 2.0 * (qf @ self._m.T) + self._m_sq[np.newaxis, :]
        best = np.argmin(dists, axis=1)  # first minimum = earliest insertion
        return [
            (self.table.words[j], math.sqrt(max(0.0, float(dists[i, j]))))
            for i, j in enumerate(best)
        ]


def nearest_word(q: np.ndarray, table: EmbeddingTable, *, d: int | None = None) -> tuple[str, float]:
    """One-shot nearest-word query; builds a throwaway index.

    Use :class:`QuantizedIndex` when decoding more than a few vectors.
    """
    q = np.asarray(q)
    return QuantizedIndex(table, d if d is not None else q.shape[0]).nearest(q)


def extract_superpixels(
    img: EncodedImage, plan: LayoutPlan, params: EncodingParams
) -> np.ndarray:
    """Read back one quantized vector per placement from the pixel buffer.

    Each superpixel's color is the per-channel mean of its P x P block,
    rounded half away from zero, so single-pixel noise of +-1 moves the
    recovered byte by at most 1.

    Returns:
        (len(placements), d) uint8 array.

    Raises:
        ValueError: image does not match params, or a placement falls
            outside the image.
    """
    if img.height != params.image_height or img.width != params.image_width:
        raise ValueError(
            f"image is {img.width}x{img.height}, params say "
            f"{params.image_width}x{params.image_height}"
        )
    geom = word_geometry(params)
    p = params.superpixel
    out = np.empty((len(plan.placements), params.feature_count), dtype=np.uint8)
    for k, (_, x, y) in enumerate(plan.placements):
        if x < 0 or y < 0 or x + geom.width_px > img.width or y + geom.height_px > img.height:
            raise ValueError(f"placement at ({x}, {y}) falls outside the image")
        for i, (r, c) in enumerate(geom.slots):
            block = img.pixels[y + r * p : y + (r + 1) * p, x + c * p : x + (c + 1) * p]
            mean = block.reshape(-1, 3).mean(axis=0)
            out[k, 3 * i : 3 * i + 3] = np.floor(mean + 0.5).astype(np.uint8)
    return out


def decode_document(
    img: EncodedImage,
    plan: LayoutPlan,
    params: EncodingParams,
    table: EmbeddingTable,
    *,
    index: QuantizedIndex | None = None,
) -> DecodedDocument:
    """Recover the word sequence of an encoded image.

    Returns an empty document for an empty plan (mean_distance 0).
    """
    if index is None:
        index = QuantizedIndex(table, params.feature_count)
    elif index.d != params.feature_count:
        raise ValueError("index was built with a different feature count")
    vectors = extract_superpixels(img, plan, params)
    if len(vectors) == 0:
        return DecodedDocument(tokens=(), mean_distance=0.0)
    hits = index.nearest_many(vectors)
    mean = sum(dist for _, dist in hits) / len(hits)
    return DecodedDocument(tokens=tuple(hits), mean_distance=mean)


def quantization_collisions(table: EmbeddingTable, d: int) -> list[tuple[str, ...]]:
    """Groups of distinct words sharing one quantized vector.

    Decoding is ambiguous inside a group; the tie rule always returns the
    earliest-inserted member. Returns one tuple per colliding group, empty
    list when the vocabulary is collision-free at this d.
    """
    matrix = quantize_matrix(table.vectors, table.stats, d)
    groups: dict[bytes, list[str]] = {}
    for word, row in zip(table.words, matrix):
        groups.setdefault(row.tobytes(), []).append(word)
    return [tuple(ws) for ws in groups.values() if len(ws) > 1]


def collision_count(table: EmbeddingTable, d: int) -> int:
    """Number of words that collide with an earlier word (0 when collision-free)."""
    return sum(len(g) - 1 for g in quantization_collisions(table, d))


def write_decoded(doc: DecodedDocument, sink: BinaryIO | Path | str) -> None:
    """Line-delimited "index word distance" records plus a summary line."""
    lines = [f"{i} {w} {dist:.6g}\n" for i, (w, dist) in enumerate(doc.tokens)]
    lines.append(f"#summary tokens={len(doc.tokens)} mean_distance={doc.mean_distance:.6g}\n")
    data = "".join(lines).encode("utf-8")
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)
