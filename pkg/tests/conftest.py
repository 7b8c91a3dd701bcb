"""Shared fixtures and synthetic-data helpers."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from textpix import Document, EmbeddingTable, EncodingParams

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


def make_table(words: list[str], vectors) -> EmbeddingTable:
    return EmbeddingTable(words=tuple(words), vectors=np.asarray(vectors, dtype=np.float32))


def random_table(vocab: int, dim: int, seed: int = 0) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    words = [f"w{i:05d}" for i in range(vocab)]
    return make_table(words, rng.normal(size=(vocab, dim)))


def collision_free_table(vocab: int, d: int, seed: int = 0) -> EmbeddingTable:
    """Table whose quantized vectors are distinct byte rows by construction.

    Row 0 is all zeros and row 1 all 255s, pinning per-dimension stats to
    [0, 255] so quantization is the identity on the stored byte values;
    the first two columns of the remaining rows enumerate the row index.
    """
    if vocab > 2 + 256 * 256:
        raise ValueError("construction supports at most 65538 words")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, 256, size=(vocab, d), dtype=np.int64)
    rows[0] = 0
    rows[1] = 255
    for i in range(2, vocab):
        rows[i, 0] = i % 256
        rows[i, 1] = (i // 256) % 256
    words = [f"w{i:05d}" for i in range(vocab)]
    table = make_table(words, rows.astype(np.float32))
    assert np.array_equal(table.stats.mins, np.zeros(d, dtype=np.float32))
    assert np.array_equal(table.stats.maxs, np.full(d, 255, dtype=np.float32))
    return table


def make_doc(words, doc_id: str = "doc", label=1) -> Document:
    return Document(id=doc_id, label=label, text=" ".join(words))


@pytest.fixture
def tiny_table() -> EmbeddingTable:
    return make_table(
        ["red", "green", "blue", "white"],
        [
            [1, 0, 0, 0.5, 0.2, 0.9],
            [0, 1, 0, 0.1, 0.8, 0.3],
            [0, 0, 1, 0.9, 0.4, 0.1],
            [1, 1, 1, 0.2, 0.6, 0.7],
        ],
    )


@pytest.fixture
def small_params() -> EncodingParams:
    return EncodingParams(
        image_width=64, image_height=64, superpixel=4, word_width=2, spacing=4, feature_count=6
    )
