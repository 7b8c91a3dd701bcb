"""Rendering, PNG I/O, crop augmentation, multi-modal composition.

Rendering is bit-exact and deterministic: the same plan, tokens, table and
params always produce the same pixel buffer, and fixed encoder settings make
the PNG bytes identical too. There is deliberately no mirror/flip operation
anywhere in this module: flipping an encoded image reverses the reading
order of the visual words and changes what the document says.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import BinaryIO

import numpy as np
from PIL import Image, UnidentifiedImageError
from PIL.PngImagePlugin import PngInfo

from .embeddings import EmbeddingTable, quantize
from .errors import ImageFormatError
from .layout import EncodingParams, LayoutPlan, plan_layout, rows_used, word_geometry
from .tokenizer import TokenSequence

PNG_COMPRESS_LEVEL = 6  # fixed so re-encoding the same pixels is byte-identical


@dataclass(frozen=True)
class ImageMeta:
    """Provenance carried in PNG text chunks."""

    doc_id: str = ""
    params_digest: str = ""
    overflow_count: int = 0
    oov_count: int = 0


@dataclass
class EncodedImage:
    """A W x H RGB pixel buffer plus provenance metadata."""

    pixels: np.ndarray  # (height, width, 3) uint8
    meta: ImageMeta = field(default_factory=ImageMeta)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("pixels must be a (H, W, 3) uint8 array")
        self.pixels = px

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class CropPolicy:
    """Square-crop augmentation settings.

    Random mode draws ``count`` top-left offsets uniformly; center mode takes
    the single centered patch. The generator is seeded from (seed, document
    id) so corpus runs are reproducible but vary per document.
    """

    crop_size: int
    count: int = 1
    seed: int = 0
    mode: str = "random"

    def __post_init__(self):
        if self.crop_size <= 0:
            raise ValueError("crop_size must be positive")
        if self.mode not in ("random", "center"):
            raise ValueError(f"mode must be 'random' or 'center', got {self.mode!r}")
        if self.mode == "random" and self.count < 1:
            raise ValueError("count must be >= 1 for random crops")


class WordTileCache:
    """Per-word pixel tiles, reused across documents sharing table and params.

    A tile is the word's full bounding box: background-filled, with each
    superpixel slot painted as a P x P block of its RGB triplet.
    """

    def __init__(self, table: EmbeddingTable, params: EncodingParams):
        self.table = table
        self.params = params
        self.geom = word_geometry(params)
        self._tiles: dict[str, np.ndarray] = {}

    def tile(self, word: str) -> np.ndarray:
        cached = self._tiles.get(word)
        if cached is not None:
            return cached
        vec = self.table.lookup(word)
        if vec is None:
            raise KeyError(f"word {word!r} not in embedding table (filter tokens first)")
        q = quantize(vec, self.table.stats, self.params.feature_count)
        p = self.params.superpixel
        rows_sp = self.geom.height_px // p
        cols_sp = self.geom.width_px // p
        grid = np.empty((rows_sp, cols_sp, 3), dtype=np.uint8)
        grid[:] = self.params.background
        for i, (r, c) in enumerate(self.geom.slots):
            grid[r, c] = q[3 * i : 3 * i + 3]
        tile = np.repeat(np.repeat(grid, p, axis=0), p, axis=1)
        tile.setflags(write=False)
        self._tiles[word] = tile
        return tile


def render(
    plan: LayoutPlan,
    tokens: TokenSequence,
    table: EmbeddingTable,
    params: EncodingParams,
    *,
    doc_id: str = "",
    cache: WordTileCache | None = None,
) -> EncodedImage:
    """Rasterize a layout plan into a pixel buffer.

    Every placement paints the token's visual word at its (x, y); the rest of
    the canvas is the background color. ``cache`` may be shared across calls
    with the same table and params to avoid re-quantizing repeated words.

    Raises:
        KeyError: a placed token is missing from the table.
    """
    if cache is None:
        cache = WordTileCache(table, params)
    canvas = np.empty((params.image_height, params.image_width, 3), dtype=np.uint8)
    canvas[:] = params.background
    w, h = cache.geom.width_px, cache.geom.height_px
    for token_index, x, y in plan.placements:
        canvas[y : y + h, x : x + w] = cache.tile(tokens.tokens[token_index])
    meta = ImageMeta(
        doc_id=doc_id,
        params_digest=plan.params_digest,
        overflow_count=plan.overflow_count,
        oov_count=tokens.oov_count,
    )
    return EncodedImage(pixels=canvas, meta=meta)


# ---------------------------------------------------------------------------
# PNG I/O (8-bit RGB, non-interlaced; metadata in tEXt chunks)


def write_png(img: EncodedImage, sink: BinaryIO | Path | str) -> None:
    """Write a lossless PNG with metadata text chunks.

    Chunk keys: doc_id, params, overflow, oov. Encoder settings are fixed,
    so identical pixel buffers yield identical PNG bytes.
    """
    info = PngInfo()
    info.add_text("doc_id", img.meta.doc_id)
    info.add_text("params", img.meta.params_digest)
    info.add_text("overflow", str(img.meta.overflow_count))
    info.add_text("oov", str(img.meta.oov_count))
    pil = Image.fromarray(img.pixels, mode="RGB")
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as fh:
            pil.save(fh, format="PNG", pnginfo=info, compress_level=PNG_COMPRESS_LEVEL)
    else:
        pil.save(sink, format="PNG", pnginfo=info, compress_level=PNG_COMPRESS_LEVEL)


def read_png(source: BinaryIO | bytes | str | Path) -> EncodedImage:
    """Read a PNG written by :func:`write_png`.

    Raises:
        ImageFormatError: corrupt stream, or a PNG that is not 8-bit RGB.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        pil = Image.open(source, formats=["PNG"])
        pil.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot read PNG: {exc}") from None
    if pil.mode != "RGB":
        raise ImageFormatError(f"unsupported PNG mode {pil.mode!r}, need 8-bit RGB")
    text = getattr(pil, "text", {}) or {}
    meta = ImageMeta(
        doc_id=text.get("doc_id", ""),
        params_digest=text.get("params", ""),
        overflow_count=int(text.get("overflow", 0)),
        oov_count=int(text.get("oov", 0)),
    )
    return EncodedImage(pixels=np.asarray(pil, dtype=np.uint8), meta=meta)


def png_digest(img: EncodedImage) -> str:
    """sha256 of the image's canonical PNG serialization."""
    buf = io.BytesIO()
    write_png(img, buf)
    return hashlib.sha256(buf.getvalue()).hexdigest()


# ---------------------------------------------------------------------------
# crop augmentation


def _crop_rng(policy: CropPolicy, doc_id: str) -> np.random.Generator:
    # stable across platforms/processes: hash (seed, doc_id) into a PCG64 seed
    key = f"{policy.seed}\x00{doc_id}".encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def crop_offsets(width: int, height: int, policy: CropPolicy, doc_id: str = "") -> list[tuple[int, int]]:
    """Top-left (x, y) offsets the policy would crop at, without materializing.

    Random mode draws uniformly and independently from
    [0, width - crop_size] x [0, height - crop_size].
    """
    if policy.crop_size > width or policy.crop_size > height:
        raise ValueError(
            f"crop_size {policy.crop_size} exceeds image {width}x{height}"
        )
    if policy.mode == "center":
        return [((width - policy.crop_size) // 2, (height - policy.crop_size) // 2)]
    rng = _crop_rng(policy, doc_id)
    max_x = width - policy.crop_size
    max_y = height - policy.crop_size
    draws = rng.integers(0, [max_x + 1, max_y + 1], size=(policy.count, 2))
    return [(int(x), int(y)) for x, y in draws]


def crops(img: EncodedImage, policy: CropPolicy) -> list[EncodedImage]:
    """Extract the policy's crops as new images (metadata preserved)."""
    offsets = crop_offsets(img.width, img.height, policy, img.meta.doc_id)
    c = policy.crop_size
    return [
        EncodedImage(pixels=img.pixels[y : y + c, x : x + c].copy(), meta=img.meta)
        for x, y in offsets
    ]


# ---------------------------------------------------------------------------
# multi-modal composition


def resize_photo(source: BinaryIO | bytes | str | Path, params: EncodingParams) -> EncodedImage:
    """Load any PIL-readable image, convert to RGB, bilinear-resize to W x H."""
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        pil = Image.open(source)
        pil.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(f"cannot read photo: {exc}") from None
    pil = pil.convert("RGB")
    if pil.size != (params.image_width, params.image_height):
        pil = pil.resize((params.image_width, params.image_height), Image.BILINEAR)
    return EncodedImage(pixels=np.asarray(pil, dtype=np.uint8))


def compose_multimodal(
    photo: EncodedImage,
    tokens: TokenSequence,
    table: EmbeddingTable,
    params: EncodingParams,
    *,
    doc_id: str = "",
) -> EncodedImage:
    """Overwrite the photo's top band with the rendered encoded text.

    The band is exactly tall enough for the text: used layout rows times the
    vertical pitch, plus the top margin. Pixels below the band are the
    untouched photo. An empty token sequence returns the photo unchanged.

    Raises:
        ValueError: photo size differs from params, or the text needs more
            rows than the photo height allows.
    """
    if photo.width != params.image_width or photo.height != params.image_height:
        raise ValueError(
            f"photo is {photo.width}x{photo.height}, params say "
            f"{params.image_width}x{params.image_height}; resize first"
        )
    plan = plan_layout(tokens, params)
    if plan.overflow_count > 0:
        raise ValueError(
            f"text does not fit above the photo: {plan.overflow_count} of "
            f"{len(tokens)} words overflow"
        )
    rows = rows_used(plan, params)
    if rows == 0:
        out = EncodedImage(pixels=photo.pixels.copy(), meta=replace(photo.meta, doc_id=doc_id))
        return out
    pitch = word_geometry(params).height_px + params.spacing
    band = params.margin + rows * pitch
    if band > photo.height:
        raise ValueError(f"text band of {band}px exceeds photo height {photo.height}px")
    rendered = render(plan, tokens, table, params, doc_id=doc_id)
    out_px = photo.pixels.copy()
    out_px[:band] = rendered.pixels[:band]
    meta = ImageMeta(
        doc_id=doc_id,
        params_digest=plan.params_digest,
        overflow_count=0,
        oov_count=tokens.oov_count,
    )
    return EncodedImage(pixels=out_px, meta=meta)
