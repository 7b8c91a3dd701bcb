"""textpix: text documents as images of quantized word-embedding superpixels.

Pipeline: parse an embedding table, tokenize a document, filter it to the
vocabulary, plan a deterministic layout of visual words, render to an RGB
buffer, and write PNG. The decode module inverts the whole thing. The public
surface deliberately has no mirror/flip operation: flipping an encoded image
changes the document it spells.
"""

from .corpus import (
    CorpusRecord,
    FieldSpec,
    Manifest,
    ManifestEntry,
    encode_corpus,
    read_20news,
    read_csv_corpus,
    read_manifest,
    write_manifest,
)
from .decode import (
    DecodedDocument,
    QuantizedIndex,
    collision_count,
    decode_document,
    extract_superpixels,
    nearest_word,
    quantization_collisions,
)
from .embeddings import (
    EmbeddingTable,
    NormalizationStats,
    compute_normalization,
    dequantize,
    parse_embedding_binary,
    parse_embedding_text,
    quantize,
    quantize_matrix,
    read_stats,
    write_embedding_binary,
    write_embedding_text,
    write_stats,
)
from .errors import (
    CorpusFormatError,
    EmbeddingFormatError,
    EncodeError,
    ImageFormatError,
    TextpixError,
)
from .layout import (
    EncodingParams,
    LayoutPlan,
    ShapeVariant,
    WordGeometry,
    capacity,
    plan_layout,
    read_plan,
    word_geometry,
    write_plan,
)
from .raster import (
    CropPolicy,
    EncodedImage,
    ImageMeta,
    compose_multimodal,
    crop_offsets,
    crops,
    read_png,
    render,
    resize_photo,
    write_png,
)
from .tokenizer import Document, TokenSequence, filter_in_vocabulary, tokenize

__version__ = "0.1.0"

__all__ = [
    "CorpusFormatError",
    "CorpusRecord",
    "CropPolicy",
    "DecodedDocument",
    "Document",
    "EmbeddingFormatError",
    "EmbeddingTable",
    "EncodeError",
    "EncodedImage",
    "EncodingParams",
    "FieldSpec",
    "ImageFormatError",
    "ImageMeta",
    "LayoutPlan",
    "Manifest",
    "ManifestEntry",
    "NormalizationStats",
    "QuantizedIndex",
    "ShapeVariant",
    "TextpixError",
    "TokenSequence",
    "WordGeometry",
    "capacity",
    "collision_count",
    "compose_multimodal",
    "compute_normalization",
    "crop_offsets",
    "crops",
    "decode_document",
    "dequantize",
    "encode_corpus",
    "extract_superpixels",
    "filter_in_vocabulary",
    "nearest_word",
    "parse_embedding_binary",
    "parse_embedding_text",
    "plan_layout",
    "quantization_collisions",
    "quantize",
    "quantize_matrix",
    "read_20news",
    "read_csv_corpus",
    "read_manifest",
    "read_plan",
    "read_png",
    "read_stats",
    "render",
    "resize_photo",
    "tokenize",
    "word_geometry",
    "write_embedding_binary",
    "write_embedding_text",
    "write_manifest",
    "write_plan",
    "write_png",
    "write_stats",
]
