"""Visual-word geometry, deterministic canvas placement, capacity analysis.

A visual word is a block of P x P superpixels, one superpixel per RGB triplet
of the quantized embedding, so a feature count d occupies d/3 superpixels.
The plain variant (VW-5) fills them row-major into a grid ``word_width``
superpixels wide; VW-1..VW-4 are fixed alternative arrangements shipped as
slot tables. Words are placed left-to-right, top-to-bottom on the canvas with
``spacing`` blank pixels between words and a symmetric outer margin.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import BinaryIO

from .tokenizer import TokenSequence


class ShapeVariant(Enum):
    """The five visual-word designs. VW5 is the row-major rectangle."""

    VW1 = "vw1"
    VW2 = "vw2"
    VW3 = "vw3"
    VW4 = "vw4"
    VW5 = "vw5"


# Fixed slot tables for the non-rectangular designs, 12 superpixels each
# (feature count 36). Hand-made approximations of the published pictures:
# the exact arrangements were only ever shown graphically. (row, col) per
# superpixel index; first two are 4 wide, last two 6 wide.
_SHAPE_SLOTS: dict[ShapeVariant, tuple[tuple[int, int], ...]] = {
    # diamond-ish block, width 4
    ShapeVariant.VW1: (
        (0, 1), (0, 2),
        (1, 0), (1, 1), (1, 2), (1, 3),
        (2, 0), (2, 1), (2, 2), (2, 3),
        (3, 1), (3, 2),
    ),
    # hollow rectangle, width 4
    ShapeVariant.VW2: (
        (0, 0), (0, 1), (0, 2), (0, 3),
        (1, 0), (1, 3),
        (2, 0), (2, 3),
        (3, 0), (3, 1), (3, 2), (3, 3),
    ),
    # cross, width 6
    ShapeVariant.VW3: (
        (0, 2), (0, 3),
        (1, 2), (1, 3),
        (2, 0), (2, 1), (2, 2), (2, 3), (2, 4), (2, 5),
        (3, 2), (3, 3),
    ),
    # staircase, width 6
    ShapeVariant.VW4: (
        (0, 0), (0, 1), (0, 2),
        (1, 1), (1, 2), (1, 3),
        (2, 2), (2, 3), (2, 4),
        (3, 3), (3, 4), (3, 5),
    ),
}


@dataclass(frozen=True)
class EncodingParams:
    """Every geometry knob of the encoding.

    Defaults reproduce the reference configuration: 256x256 canvas, 4x4
    superpixels, word width 4, spacing 12, 36 features, rectangular words.
    ``margin`` defaults to spacing // 2.
    """

    image_width: int = 256
    image_height: int = 256
    superpixel: int = 4
    word_width: int = 4
    spacing: int = 12
    feature_count: int = 36
    shape: ShapeVariant = ShapeVariant.VW5
    background: tuple[int, int, int] = (0, 0, 0)
    margin: int | None = None

    def __post_init__(self):
        if self.margin is None:
            object.__setattr__(self, "margin", self.spacing // 2)
        if self.feature_count <= 0 or self.feature_count % 3 != 0:
            raise ValueError(
                f"feature count must be a positive multiple of 3, got {self.feature_count}"
            )
        for name in ("image_width", "image_height", "superpixel", "word_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.spacing < 0:
            raise ValueError("spacing must be >= 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if len(self.background) != 3 or not all(0 <= c <= 255 for c in self.background):
            raise ValueError("background must be an RGB triple of bytes")
        object.__setattr__(self, "background", tuple(int(c) for c in self.background))
        if not isinstance(self.shape, ShapeVariant):
            object.__setattr__(self, "shape", ShapeVariant(self.shape))
        geom = word_geometry(self)
        if 2 * self.margin + geom.width_px > self.image_width:
            raise ValueError(
                f"one visual word ({geom.width_px}px wide + 2x{self.margin}px margin) "
                f"does not fit the canvas width {self.image_width}"
            )
        if 2 * self.margin + geom.height_px > self.image_height:
            raise ValueError(
                f"one visual word ({geom.height_px}px tall + 2x{self.margin}px margin) "
                f"does not fit the canvas height {self.image_height}"
            )

    @property
    def superpixel_count(self) -> int:
        return self.feature_count // 3

    def digest(self) -> str:
        """Stable lowercase-hex sha256 over the canonical parameter serialization."""
        canon = (
            f"w={self.image_width} h={self.image_height} p={self.superpixel} "
            f"v={self.word_width} s={self.spacing} d={self.feature_count} "
            f"shape={self.shape.value} bg={self.background[0]},{self.background[1]},"
            f"{self.background[2]} margin={self.margin}"
        )
        return hashlib.sha256(canon.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class WordGeometry:
    """Pixel footprint of one visual word plus its superpixel slot list."""

    width_px: int
    height_px: int
    slots: tuple[tuple[int, int], ...]  # (row, col) in superpixel units


@dataclass(frozen=True)
class LayoutPlan:
    """Deterministic placement of each token's visual word on the canvas.

    ``placements`` holds (token_index, x, y) in token order; tokens that did
    not fit are counted in ``overflow_count``.
    """

    placements: tuple[tuple[int, int, int], ...]
    overflow_count: int
    params_digest: str


def word_geometry(params: EncodingParams) -> WordGeometry:
    """Compute the superpixel slots and pixel bounding box of one visual word.

    The rectangle variant fills d/3 slots row-major into a grid
    ``word_width`` wide; the last row may be partially filled but the
    bounding box keeps the design width. Shaped variants use their fixed
    slot tables and require a matching feature count and word width.
    """
    n = params.superpixel_count
    p = params.superpixel
    if params.shape is ShapeVariant.VW5:
        rows = math.ceil(n / params.word_width)
        slots = tuple((i // params.word_width, i % params.word_width) for i in range(n))
        return WordGeometry(width_px=params.word_width * p, height_px=rows * p, slots=slots)

    slots = _SHAPE_SLOTS[params.shape]
    if len(slots) != n:
        raise ValueError(
            f"shape {params.shape.value} defines {len(slots)} superpixels but "
            f"feature count {params.feature_count} needs {n}"
        )
    width_sp = max(c for _, c in slots) + 1
    if width_sp != params.word_width:
        raise ValueError(
            f"shape {params.shape.value} is {width_sp} superpixels wide, "
            f"word_width is {params.word_width}"
        )
    height_sp = max(r for r, _ in slots) + 1
    return WordGeometry(width_px=width_sp * p, height_px=height_sp * p, slots=slots)


def plan_layout(tokens: TokenSequence, params: EncodingParams) -> LayoutPlan:
    """Place tokens left-to-right, top-to-bottom from (margin, margin).

    Horizontal pitch is word width + spacing, vertical pitch word height +
    spacing. A word that would cross the right edge starts a new row; one
    that would cross the bottom edge overflows, along with every later token.
    """
    geom = word_geometry(params)
    if capacity(params) == 0:
        raise ValueError("no visual word fits these parameters")
    w, h = geom.width_px, geom.height_px
    right = params.image_width - params.margin
    bottom = params.image_height - params.margin

    placements: list[tuple[int, int, int]] = []
    x = y = params.margin
    for i in range(len(tokens)):
        if x + w > right:
            x = params.margin
            y += h + params.spacing
        if y + h > bottom:
            break
        placements.append((i, x, y))
        x += w + params.spacing
    return LayoutPlan(
        placements=tuple(placements),
        overflow_count=len(tokens) - len(placements),
        params_digest=params.digest(),
    )


def capacity(params: EncodingParams) -> int:
    """Maximum number of visual words the canvas can hold (closed form).

    Equals the number of placements plan_layout produces for an arbitrarily
    long token sequence: full rows of
    floor((usable_w + s) / (word_w + s)) words, with
    floor((usable_h + s) / (word_h + s)) rows inside the margins.
    """
    geom = word_geometry(params)
    usable_w = params.image_width - 2 * params.margin
    usable_h = params.image_height - 2 * params.margin
    cols = (usable_w + params.spacing) // (geom.width_px + params.spacing)
    rows = (usable_h + params.spacing) // (geom.height_px + params.spacing)
    return max(0, cols) * max(0, rows)


def rows_used(plan: LayoutPlan, params: EncodingParams) -> int:
    """Number of layout rows actually occupied by placements."""
    if not plan.placements:
        return 0
    geom = word_geometry(params)
    pitch = geom.height_px + params.spacing
    max_y = max(y for _, _, y in plan.placements)
    return (max_y - params.margin) // pitch + 1


# ---------------------------------------------------------------------------
# sidecar serialization: header lines, then one "token_index x y" per placement


def write_plan(plan: LayoutPlan, sink: BinaryIO | Path | str) -> None:
    lines = [
        "#textpix-plan v1\n",
        f"#params {plan.params_digest}\n",
        f"#overflow {plan.overflow_count}\n",
    ]
    lines += [f"{i} {x} {y}\n" for i, x, y in plan.placements]
    data = "".join(lines).encode("ascii")
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)


def read_plan(source: BinaryIO | bytes | str | Path) -> LayoutPlan:
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()
    lines = raw.decode("ascii").splitlines()
    if not lines or lines[0] != "#textpix-plan v1":
        raise ValueError("not a layout plan sidecar")
    digest = ""
    overflow = 0
    placements: list[tuple[int, int, int]] = []
    for line in lines[1:]:
        if line.startswith("#params "):
            digest = line.split(" ", 1)[1]
        elif line.startswith("#overflow "):
            overflow = int(line.split(" ", 1)[1])
        elif line:
            i, x, y = (int(f) for f in line.split())
            placements.append((i, x, y))
    return LayoutPlan(placements=tuple(placements), overflow_count=overflow, params_digest=digest)
