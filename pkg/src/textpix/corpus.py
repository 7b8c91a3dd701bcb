"""Corpus ingestion and the batch encode pipeline.

Readers stream labeled records out of CSV benchmarks (class index plus text
fields) and the 20news bydate directory tree. ``encode_corpus`` runs
tokenize -> filter -> plan -> render -> PNG over every record, in parallel
when asked, writing ``<root>/<split>/<label>/<id>.png`` plus a manifest.
Outputs are deterministic per record, so the tree is byte-identical no
matter how many workers ran.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .embeddings import EmbeddingTable, stats_digest, write_stats
from .errors import CorpusFormatError, EncodeError
from .layout import EncodingParams, plan_layout, write_plan
from .raster import CropPolicy, WordTileCache, crops, render, write_png
from .tokenizer import Document, filter_in_vocabulary, tokenize

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.tsv"
STATS_NAME = "stats.txt"

# newsgroup -> super-category selection used by the 4-class benchmark subset;
# a trailing dot marks a prefix match
NEWS20_CATEGORIES: dict[str, tuple[str, ...]] = {
    "comp": ("comp.",),
    "rec": ("rec.",),
    "politics": ("talk.politics.",),
    "religion": ("alt.atheism", "soc.religion.christian", "talk.religion.misc"),
}


@dataclass(frozen=True)
class CorpusRecord:
    document: Document
    split: str  # "train" | "test"


@dataclass(frozen=True)
class FieldSpec:
    """Which CSV columns carry the label and the text (0-based)."""

    label_field: int = 0
    text_fields: tuple[int, ...] = (1, 2)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    label: str
    split: str
    path: str  # relative to the output root, posix separators
    token_count: int
    oov_count: int
    overflow_count: int
    error: str = ""


@dataclass
class Manifest:
    """Per-corpus index of encoded outputs.

    ``created`` is the only non-reproducible field; it is excluded from
    :meth:`content_digest`. Throughput numbers live on the object, never in
    the file.
    """

    params_digest: str
    table_digest: str
    stats_digest: str
    created: str
    entries: tuple[ManifestEntry, ...]
    elapsed_seconds: float = field(default=0.0, compare=False)
    docs_per_second: float = field(default=0.0, compare=False)

    def content_digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for line in self._lines(include_created=False):
            h.update(line.encode("utf-8"))
        return h.hexdigest()

    def _lines(self, *, include_created: bool = True) -> Iterator[str]:
        yield (
            f"#textpix-manifest v1 params={self.params_digest} "
            f"table={self.table_digest} stats={self.stats_digest}\n"
        )
        if include_created:
            yield f"#created {self.created}\n"
        yield "#fields id label split path tokens oov overflow error\n"
        for e in self.entries:
            err = e.error if e.error else "-"
            yield (
                f"{e.id}\t{e.label}\t{e.split}\t{e.path}\t"
                f"{e.token_count}\t{e.oov_count}\t{e.overflow_count}\t{err}\n"
            )


def write_manifest(manifest: Manifest, path: Path | str) -> None:
    Path(path).write_text("".join(manifest._lines()), encoding="utf-8")


def read_manifest(path: Path | str) -> Manifest:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#textpix-manifest v1 "):
        raise CorpusFormatError(f"{path}: not a manifest file")
    head = dict(f.split("=", 1) for f in lines[0].split()[2:])
    created = ""
    entries: list[ManifestEntry] = []
    for line in lines[1:]:
        if line.startswith("#created "):
            created = line.split(" ", 1)[1]
        elif line.startswith("#") or not line:
            continue
        else:
            f = line.split("\t")
            if len(f) != 8:
                raise CorpusFormatError(f"{path}: bad manifest row: {line!r}")
            entries.append(
                ManifestEntry(
                    id=f[0], label=f[1], split=f[2], path=f[3],
                    token_count=int(f[4]), oov_count=int(f[5]),
                    overflow_count=int(f[6]), error="" if f[7] == "-" else f[7],
                )
            )
    return Manifest(
        params_digest=head.get("params", ""),
        table_digest=head.get("table", ""),
        stats_digest=head.get("stats", ""),
        created=created,
        entries=tuple(entries),
    )


# ---------------------------------------------------------------------------
# readers


def read_csv_corpus(
    source, field_spec: FieldSpec = FieldSpec(), *, split: str = "train"
) -> Iterator[CorpusRecord]:
    """Stream records out of a quoted CSV benchmark file.

    The label column holds 1-based integer class indices; the configured
    text columns are concatenated with a single space (empty fields are
    skipped). Row numbers in errors are 1-based.
    """
    if isinstance(source, (str, Path)):
        fh = open(source, "r", encoding="utf-8", newline="")
    elif isinstance(source, (bytes, bytearray)):
        fh = io.StringIO(bytes(source).decode("utf-8"))
    else:
        fh = io.TextIOWrapper(source, encoding="utf-8", newline="")
    try:
        reader = csv.reader(fh)
        rownum = 0
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise CorpusFormatError(f"row {rownum + 1}: malformed CSV: {exc}") from None
            rownum += 1
            if not row:
                continue
            if field_spec.label_field >= len(row):
                raise CorpusFormatError(
                    f"row {rownum}: label field {field_spec.label_field} out of range"
                )
            raw_label = row[field_spec.label_field].strip()
            try:
                label = int(raw_label)
            except ValueError:
                raise CorpusFormatError(
                    f"row {rownum}: label {raw_label!r} is not an integer"
                ) from None
            parts = []
            for idx in field_spec.text_fields:
                if idx >= len(row):
                    raise CorpusFormatError(f"row {rownum}: text field {idx} out of range")
                if row[idx]:
                    parts.append(row[idx])
            yield CorpusRecord(
                document=Document(id=f"{split}-{rownum:06d}", label=label, text=" ".join(parts)),
                split=split,
            )
    finally:
        fh.close()


def read_20news(
    root: Path | str, categories: Sequence[str] | None = None
) -> Iterator[CorpusRecord]:
    """Stream the 20news bydate tree (one directory per newsgroup, one file per message).

    ``categories`` selects super-categories from NEWS20_CATEGORIES and maps
    matching newsgroups onto them; empty or None keeps all newsgroups with
    the group name as label. Unreadable files are skipped with a warning.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusFormatError(f"20news root {root} is not a directory")
    if categories:
        for name in categories:
            if name not in NEWS20_CATEGORIES:
                raise CorpusFormatError(
                    f"unknown category {name!r}; known: {sorted(NEWS20_CATEGORIES)}"
                )

    split_dirs = sorted(
        d for d in root.iterdir() if d.is_dir() and ("train" in d.name or "test" in d.name)
    )
    if not split_dirs:
        raise CorpusFormatError(f"{root} has no train/test subdirectories")

    skipped = 0
    for split_dir in split_dirs:
        split = "train" if "train" in split_dir.name else "test"
        for group_dir in sorted(d for d in split_dir.iterdir() if d.is_dir()):
            label = _news20_label(group_dir.name, categories)
            if label is None:
                continue
            for msg in sorted(group_dir.iterdir()):
                if not msg.is_file():
                    continue
                try:
                    text = msg.read_text(encoding="latin-1")
                except OSError as exc:
                    skipped += 1
                    logger.warning("skipping unreadable %s: %s", msg, exc)
                    continue
                yield CorpusRecord(
                    document=Document(
                        id=f"{split}-{group_dir.name}-{msg.name}", label=label, text=text
                    ),
                    split=split,
                )
    if skipped:
        logger.warning("skipped %d unreadable files under %s", skipped, root)


def _news20_label(group: str, categories: Sequence[str] | None) -> str | None:
    if not categories:
        return group
    for name in categories:
        for pat in NEWS20_CATEGORIES[name]:
            if pat.endswith("."):
                if group.startswith(pat):
                    return name
            elif group == pat:
                return name
    return None


# ---------------------------------------------------------------------------
# batch encoding

# worker-process state, set once by the pool initializer
_WORKER: dict = {}


def _init_worker(table, params, policy, output_root, keep_case, write_plans):
    _WORKER.update(
        table=table,
        params=params,
        policy=policy,
        output_root=Path(output_root),
        keep_case=keep_case,
        write_plans=write_plans,
        cache=WordTileCache(table, params),
    )


def _encode_record(record: CorpusRecord) -> ManifestEntry:
    w = _WORKER
    return _encode_one(
        record, w["table"], w["params"], w["policy"], w["output_root"],
        keep_case=w["keep_case"], write_plans=w["write_plans"], cache=w["cache"],
    )


def _encode_one(
    record: CorpusRecord,
    table: EmbeddingTable,
    params: EncodingParams,
    policy: CropPolicy | None,
    output_root: Path,
    *,
    keep_case: bool,
    write_plans: bool,
    cache: WordTileCache,
) -> ManifestEntry:
    doc = record.document
    raw = tokenize(doc, keep_case=keep_case)
    kept = filter_in_vocabulary(raw, table)
    if len(raw) > 0 and len(kept) == 0:
        logger.warning("document %s: all %d tokens out of vocabulary", doc.id, len(raw))
    plan = plan_layout(kept, params)
    img = render(plan, kept, table, params, doc_id=doc.id, cache=cache)

    rel = Path(record.split) / str(doc.label) / f"{doc.id}.png"
    dest = output_root / rel
    dest.parent.mkdir(parents=True, exist_ok=True)
    write_png(img, dest)
    if write_plans:
        write_plan(plan, dest.with_suffix(".plan"))
    if policy is not None:
        for k, crop in enumerate(crops(img, policy)):
            write_png(crop, dest.with_name(f"{doc.id}.crop{k}.png"))

    return ManifestEntry(
        id=doc.id,
        label=str(doc.label),
        split=record.split,
        path=rel.as_posix(),
        token_count=len(raw),
        oov_count=kept.oov_count,
        overflow_count=plan.overflow_count,
    )


def encode_corpus(
    records: Iterable[CorpusRecord],
    table: EmbeddingTable,
    params: EncodingParams,
    output_root: Path | str,
    *,
    policy: CropPolicy | None = None,
    workers: int = 1,
    strict: bool = True,
    keep_case: bool = False,
    write_plans: bool = False,
) -> Manifest:
    """Encode every record to PNG under ``output_root`` and write the manifest.

    The manifest preserves input order regardless of worker completion
    order; per-record failures abort the run in strict mode and become
    manifest error entries in lenient mode. The normalization stats sidecar
    is always written next to the manifest so later runs can reuse it.

    Returns:
        The manifest, with measured ``docs_per_second`` on the object.
    """
    output_root = Path(output_root)
    output_root.mkdir(parents=True, exist_ok=True)
    write_stats(table.stats, output_root / STATS_NAME)

    entries: list[ManifestEntry] = []
    failures = 0
    t0 = time.perf_counter()

    if workers <= 1:
        cache = WordTileCache(table, params)
        for record in records:
            entries.append(
                _encode_guarded(
                    record, strict,
                    lambda r=record: _encode_one(
                        r, table, params, policy, output_root,
                        keep_case=keep_case, write_plans=write_plans, cache=cache,
                    ),
                )
            )
    else:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(table, params, policy, output_root, keep_case, write_plans),
        ) as pool:
            if strict:
                for entry in pool.map(_encode_record, records, chunksize=16):
                    entries.append(entry)
            else:
                futures = [(r, pool.submit(_encode_record, r)) for r in records]
                for record, fut in futures:
                    try:
                        entries.append(fut.result())
                    except Exception as exc:
                        entries.append(_failure_entry(record, exc))

    failures = sum(1 for e in entries if e.error)
    elapsed = time.perf_counter() - t0

    manifest = Manifest(
        params_digest=params.digest(),
        table_digest=table.digest(),
        stats_digest=stats_digest(table.stats),
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        entries=tuple(entries),
        elapsed_seconds=elapsed,
        docs_per_second=len(entries) / elapsed if elapsed > 0 else 0.0,
    )
    write_manifest(manifest, output_root / MANIFEST_NAME)
    logger.info(
        "encoded %d records (%d failed) in %.2fs: %.1f docs/s",
        len(entries), failures, elapsed, manifest.docs_per_second,
    )
    return manifest


def _encode_guarded(record: CorpusRecord, strict: bool, fn) -> ManifestEntry:
    try:
        return fn()
    except Exception as exc:
        if strict:
            raise EncodeError(f"record {record.document.id}: {exc}") from exc
        logger.warning("record %s failed: %s", record.document.id, exc)
        return _failure_entry(record, exc)


def _failure_entry(record: CorpusRecord, exc: Exception) -> ManifestEntry:
    return ManifestEntry(
        id=record.document.id,
        label=str(record.document.label),
        split=record.split,
        path="",
        token_count=0,
        oov_count=0,
        overflow_count=0,
        error=str(exc).replace("\t", " ").replace("\n", " "),
    )


def default_workers() -> int:
    env = os.environ.get("TEXTPIX_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)
