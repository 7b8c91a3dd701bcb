"""Command-line surface: encode, decode, capacity, compose, inspect.

Defaults reproduce the reference configuration (d=36, s=12, V=4, P=4,
256x256). Exit codes: 0 success, 1 validation error, 2 runtime failure.
Error messages go to standard error as a single line prefixed "error:".
Environment overrides: TEXTPIX_OUT (output root), TEXTPIX_WORKERS.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    FieldSpec,
    default_workers,
    encode_corpus,
    read_20news,
    read_csv_corpus,
)
from .decode import QuantizedIndex, collision_count, decode_document, write_decoded
from .embeddings import (
    EmbeddingTable,
    parse_embedding_binary,
    parse_embedding_text,
    read_stats,
)
from .errors import TextpixError
from .layout import EncodingParams, ShapeVariant, capacity, plan_layout, read_plan
from .raster import CropPolicy, compose_multimodal, read_png, resize_photo, write_png
from .tokenizer import filter_in_vocabulary, tokenize

_MIRROR_MESSAGE = (
    "mirror augmentation is not supported: flipping an encoded image reverses "
    "the reading order of the visual words and changes what the document says"
)


class _Fail(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _add_params_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("encoding parameters")
    g.add_argument("--d", type=int, default=36, help="embedding features per word, multiple of 3 (default 36)")
    g.add_argument("--s", type=int, default=12, help="blank pixels between visual words (default 12)")
    g.add_argument("--V", type=int, default=4, help="visual word width in superpixels (default 4)")
    g.add_argument("--P", type=int, default=4, help="superpixel side in pixels (default 4)")
    g.add_argument("--size", type=int, default=256, help="square canvas side (default 256)")
    g.add_argument("--width", type=int, default=None, help="canvas width, overrides --size")
    g.add_argument("--height", type=int, default=None, help="canvas height, overrides --size")
    g.add_argument("--shape", choices=[v.value for v in ShapeVariant], default="vw5",
                   help="visual word design (default vw5, the plain rectangle)")
    g.add_argument("--background", default="0,0,0", help="background RGB, e.g. 0,0,0")
    g.add_argument("--margin", type=int, default=None,
                   help="outer margin in pixels (default spacing // 2)")


def _params_from_args(args) -> EncodingParams:
    try:
        bg = tuple(int(c) for c in args.background.split(","))
    except ValueError:
        raise _Fail(f"background must be R,G,B integers, got {args.background!r}")
    try:
        return EncodingParams(
            image_width=args.width if args.width is not None else args.size,
            image_height=args.height if args.height is not None else args.size,
            superpixel=args.P,
            word_width=args.V,
            spacing=args.s,
            feature_count=args.d,
            shape=ShapeVariant(args.shape),
            background=bg,
            margin=args.margin,
        )
    except ValueError as exc:
        raise _Fail(str(exc))


def _add_emb_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--emb", required=True, help="embedding file path")
    p.add_argument("--emb-format", choices=["auto", "text", "binary"], default="auto",
                   help="embedding file format (default auto-detect)")


def _load_table(args) -> EmbeddingTable:
    path = Path(args.emb)
    if not path.is_file():
        raise _Fail(f"embedding file not found: {path}")
    fmt = args.emb_format
    if fmt == "auto":
        fmt = _sniff_format(path)
    if fmt == "binary":
        return parse_embedding_binary(path)
    return parse_embedding_text(path)


def _sniff_format(path: Path) -> str:
    if path.suffix == ".bin":
        return "binary"
    head = path.read_bytes()[:4096]
    try:
        head.decode("utf-8")
        return "text"
    except UnicodeDecodeError:
        return "binary"


# ---------------------------------------------------------------------------
# subcommands


def cmd_encode(args) -> int:
    if args.mirror:
        raise _Fail(_MIRROR_MESSAGE)
    params = _params_from_args(args)
    out = args.out or os.environ.get("TEXTPIX_OUT")
    if not out:
        raise _Fail("no output root: pass --out or set TEXTPIX_OUT")
    if not args.inputs and not args.news20:
        raise _Fail("no input: pass --in FILE[:SPLIT] or --news20 ROOT")

    policy = None
    if args.crops:
        if args.crop_size is None:
            raise _Fail("--crops needs --crop-size")
        try:
            policy = CropPolicy(crop_size=args.crop_size, count=args.crops, seed=args.seed)
        except ValueError as exc:
            raise _Fail(str(exc))

    csv_inputs = []
    for item in args.inputs or []:
        path, _, split = item.partition(":")
        if not Path(path).is_file():
            raise _Fail(f"corpus file not found: {path}")
        csv_inputs.append((path, split or "train"))
    if args.news20 and not Path(args.news20).is_dir():
        raise _Fail(f"20news root not found: {args.news20}")
    spec = FieldSpec(
        label_field=args.label_field,
        text_fields=tuple(int(i) for i in args.text_fields.split(",")),
    )

    table = _load_table(args)

    def records():
        for path, split in csv_inputs:
            yield from read_csv_corpus(path, spec, split=split)
        if args.news20:
            cats = None if args.categories == "all" else tuple(args.categories.split(","))
            yield from read_20news(args.news20, cats)

    manifest = encode_corpus(
        records(), table, params, out,
        policy=policy,
        workers=args.workers,
        strict=not args.lenient,
        keep_case=args.keep_case,
        write_plans=args.plans,
    )
    total_tokens = sum(e.token_count for e in manifest.entries)
    total_oov = sum(e.oov_count for e in manifest.entries)
    total_overflow = sum(e.overflow_count for e in manifest.entries)
    kept = total_tokens - total_oov
    print(
        f"records={len(manifest.entries)} "
        f"oov_rate={_pct(total_oov, total_tokens)} "
        f"overflow_rate={_pct(total_overflow, kept)} "
        f"throughput={manifest.docs_per_second:.1f} docs/s"
    )
    return 0


def _pct(num: int, denom: int) -> str:
    return f"{100.0 * num / denom:.2f}%" if denom else "0.00%"


def cmd_decode(args) -> int:
    params = _params_from_args(args)
    image_path = Path(args.image)
    if not image_path.is_file():
        raise _Fail(f"image not found: {image_path}")
    plan_path = Path(args.plan) if args.plan else image_path.with_suffix(".plan")
    if not plan_path.is_file():
        raise _Fail(f"layout plan sidecar not found: {plan_path}")

    img = read_png(image_path)
    if img.width != params.image_width or img.height != params.image_height:
        raise _Fail(
            f"image is {img.width}x{img.height} but parameters say "
            f"{params.image_width}x{params.image_height}; cropped or composed "
            f"images cannot be decoded"
        )
    plan = read_plan(plan_path)
    if plan.params_digest and plan.params_digest != params.digest():
        raise _Fail("plan sidecar was produced with different encoding parameters")
    if img.meta.params_digest and img.meta.params_digest != params.digest():
        raise _Fail("image was encoded with different encoding parameters")

    table = _load_table(args)
    stats = read_stats(args.stats) if args.stats else table.stats
    index = QuantizedIndex(table, params.feature_count, stats=stats)
    decoded = decode_document(img, plan, params, table, index=index)
    if decoded.mean_distance > 0:
        print(
            "warning: nonzero mean distance; stats or embeddings may not match "
            "the ones used for encoding",
            file=sys.stderr,
        )
    if args.out:
        write_decoded(decoded, args.out)
    else:
        write_decoded(decoded, sys.stdout.buffer)
        sys.stdout.buffer.flush()
    return 0


def cmd_capacity(args) -> int:
    params = _params_from_args(args)
    if not args.sweep:
        print(capacity(params))
        return 0
    print("d\tMw")
    from dataclasses import replace

    for d in (12, 24, 36, 48, 60):
        try:
            p = replace(params, feature_count=d)
        except ValueError:
            print(f"{d}\t-")
            continue
        print(f"{d}\t{capacity(p)}")
    return 0


def cmd_compose(args) -> int:
    params = _params_from_args(args)
    if args.text is not None:
        text = args.text
    else:
        tf = Path(args.text_file)
        if not tf.is_file():
            raise _Fail(f"text file not found: {tf}")
        text = tf.read_text(encoding="utf-8")
    photo_path = Path(args.photo)
    if not photo_path.is_file():
        raise _Fail(f"photo not found: {photo_path}")

    table = _load_table(args)
    tokens = filter_in_vocabulary(tokenize(text, keep_case=args.keep_case), table)
    photo = resize_photo(photo_path, params)
    try:
        composite = compose_multimodal(photo, tokens, table, params, doc_id=photo_path.stem)
    except ValueError as exc:
        raise _Fail(str(exc))
    write_png(composite, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_inspect(args) -> int:
    params = _params_from_args(args)
    table = _load_table(args)
    spans = table.stats.maxs - table.stats.mins
    print(f"vocab={len(table)} dim={table.dim}")
    print(
        f"stats: min={table.stats.mins.min():.6g} max={table.stats.maxs.max():.6g} "
        f"span_min={spans.min():.6g} span_max={spans.max():.6g}"
    )
    d = min(params.feature_count, table.dim - table.dim % 3)
    if d >= 3:
        print(f"collisions={collision_count(table, d)} (at d={d})")
    print(f"params={params.digest()}")
    print(f"table={table.digest()}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textpix",
        description="Encode text documents as images of quantized word-embedding superpixels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"],
                        help="logging verbosity on stderr (default warning)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a corpus into a PNG tree + manifest")
    _add_emb_flags(p)
    _add_params_flags(p)
    p.add_argument("--in", dest="inputs", action="append", metavar="FILE[:SPLIT]",
                   help="CSV corpus file, optional split tag (default train); repeatable")
    p.add_argument("--label-field", type=int, default=0, help="0-based CSV label column")
    p.add_argument("--text-fields", default="1,2", help="0-based CSV text columns, comma-separated")
    p.add_argument("--news20", metavar="ROOT", help="20news bydate root directory")
    p.add_argument("--categories", default="comp,politics,rec,religion",
                   help="20news super-categories, or 'all' for every newsgroup")
    p.add_argument("--out", help="output root (or TEXTPIX_OUT)")
    p.add_argument("--workers", type=int, default=default_workers(),
                   help="encode worker processes (default TEXTPIX_WORKERS or CPU count)")
    p.add_argument("--lenient", action="store_true",
                   help="record per-document failures in the manifest instead of aborting")
    p.add_argument("--keep-case", action="store_true", help="skip lowercasing")
    p.add_argument("--plans", action="store_true", help="write a .plan sidecar per image")
    p.add_argument("--crops", type=int, default=0, metavar="N",
                   help="also write N random crops per image")
    p.add_argument("--crop-size", type=int, default=None, help="crop side in pixels")
    p.add_argument("--seed", type=int, default=0, help="crop seed (default 0)")
    p.add_argument("--mirror", action="store_true", help=f"rejected: {_MIRROR_MESSAGE}")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover words from an encoded image")
    _add_emb_flags(p)
    _add_params_flags(p)
    p.add_argument("--image", required=True, help="encoded PNG")
    p.add_argument("--plan", help="layout plan sidecar (default: image path with .plan)")
    p.add_argument("--stats", help="normalization stats sidecar (default: computed from --emb)")
    p.add_argument("--out", help="write decoded records here instead of stdout")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("capacity", help="how many visual words fit the canvas")
    _add_params_flags(p)
    p.add_argument("--sweep", action="store_true", help="table over feature counts 12..60")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("compose", help="superimpose encoded text onto a photo")
    _add_emb_flags(p)
    _add_params_flags(p)
    p.add_argument("--photo", required=True, help="photo file (any PIL-readable format)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--text", help="inline text to encode")
    g.add_argument("--text-file", help="file with text to encode")
    p.add_argument("--keep-case", action="store_true", help="skip lowercasing")
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("inspect", help="embedding table statistics and digests")
    _add_emb_flags(p)
    _add_params_flags(p)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TextpixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
