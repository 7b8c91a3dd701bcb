"""Corpus readers, the batch encode pipeline, and the manifest."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from textpix import (
    CorpusFormatError,
    EncodeError,
    EncodingParams,
    FieldSpec,
    encode_corpus,
    read_20news,
    read_csv_corpus,
    read_manifest,
    read_png,
    read_stats,
)
from textpix.corpus import NEWS20_CATEGORIES, Manifest

from conftest import random_table

PARAMS = EncodingParams(
    image_width=96, image_height=96, superpixel=4, word_width=2, spacing=4, feature_count=12
)


class TestReadCsv:
    def test_label_and_concatenated_text(self):
        rows = list(read_csv_corpus(b'"3","title words","description words"\n'))
        assert len(rows) == 1
        doc = rows[0].document
        assert doc.label == 3
        assert doc.text == "title words description words"
        assert rows[0].split == "train"

    def test_escaped_quotes_unescaped(self):
        rows = list(read_csv_corpus(b'"1","say ""hi"" now","x"\n'))
        assert rows[0].document.text == 'say "hi" now x'

    def test_empty_description_gives_title_only(self):
        rows = list(read_csv_corpus(b'"2","only title",""\n'))
        assert rows[0].document.text == "only title"

    def test_split_tag_and_ids(self):
        rows = list(read_csv_corpus(b'"1","a","b"\n"2","c","d"\n', split="test"))
        assert [r.split for r in rows] == ["test", "test"]
        assert [r.document.id for r in rows] == ["test-000001", "test-000002"]

    def test_non_integer_label_rejected_with_row(self):
        with pytest.raises(CorpusFormatError, match="row 2"):
            list(read_csv_corpus(b'"1","a","b"\n"x","c","d"\n'))

    def test_missing_field_rejected_with_row(self):
        with pytest.raises(CorpusFormatError, match="row 1.*out of range"):
            list(read_csv_corpus(b'"1","only-one-text-field"\n'))

    def test_custom_field_spec(self):
        spec = FieldSpec(label_field=1, text_fields=(0,))
        rows = list(read_csv_corpus(b'"body text","7"\n', spec))
        assert rows[0].document.label == 7
        assert rows[0].document.text == "body text"

    def test_reads_from_path(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text('"1","t","d"\n')
        assert len(list(read_csv_corpus(p))) == 1


def _fake_20news(root: Path):
    layout = {
        "20news-bydate-train": {
            "comp.graphics": ["101", "102"],
            "rec.autos": ["201"],
            "talk.politics.guns": ["301"],
            "alt.atheism": ["401"],
            "sci.space": ["501"],
        },
        "20news-bydate-test": {
            "comp.graphics": ["111"],
            "soc.religion.christian": ["411"],
        },
    }
    for split_dir, groups in layout.items():
        for group, files in groups.items():
            d = root / split_dir / group
            d.mkdir(parents=True)
            for f in files:
                (d / f).write_text(f"Subject: hello\n\nbody of {group}/{f}\n")


class TestRead20News:
    def test_four_category_filter(self, tmp_path):
        _fake_20news(tmp_path)
        rows = list(read_20news(tmp_path, ("comp", "politics", "rec", "religion")))
        labels = {r.document.label for r in rows}
        assert labels == {"comp", "politics", "rec", "religion"}
        # sci.space matches no super-category and is dropped
        assert not any("sci.space" in r.document.id for r in rows)
        assert {r.split for r in rows} == {"train", "test"}

    def test_empty_filter_keeps_all_groups(self, tmp_path):
        _fake_20news(tmp_path)
        rows = list(read_20news(tmp_path, None))
        assert "sci.space" in {r.document.label for r in rows}

    def test_missing_root_rejected(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="not a directory"):
            list(read_20news(tmp_path / "nope"))

    def test_unknown_category_rejected(self, tmp_path):
        _fake_20news(tmp_path)
        with pytest.raises(CorpusFormatError, match="unknown category"):
            list(read_20news(tmp_path, ("sports",)))

    def test_ids_unique(self, tmp_path):
        _fake_20news(tmp_path)
        ids = [r.document.id for r in read_20news(tmp_path, None)]
        assert len(ids) == len(set(ids))

    @pytest.mark.skipif(
        not os.environ.get("TEXTPIX_20NEWS_ROOT"),
        reason="set TEXTPIX_20NEWS_ROOT to a real bydate tree",
    )
    def test_reference_subset_counts(self):
        rows = list(
            read_20news(os.environ["TEXTPIX_20NEWS_ROOT"], ("comp", "politics", "rec", "religion"))
        )
        train = sum(1 for r in rows if r.split == "train")
        test = sum(1 for r in rows if r.split == "test")
        assert abs(train - 7975) / 7975 < 0.10
        assert abs(test - 5319) / 5319 < 0.10


def _toy_records(table, n=2, words_per_doc=8, split="train", seed=0):
    from textpix import CorpusRecord, Document

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        words = rng.choice(table.words, size=words_per_doc)
        out.append(
            CorpusRecord(
                document=Document(id=f"{split}-{i:04d}", label=1 + i % 2, text=" ".join(words)),
                split=split,
            )
        )
    return out


class TestEncodeCorpus:
    def test_toy_corpus_writes_tree_and_manifest(self, tmp_path):
        table = random_table(vocab=40, dim=12, seed=1)
        manifest = encode_corpus(_toy_records(table, n=2), table, PARAMS, tmp_path)
        assert len(manifest.entries) == 2
        for e in manifest.entries:
            assert (tmp_path / e.path).is_file()
            assert e.error == ""
        assert manifest.params_digest == PARAMS.digest()
        assert manifest.table_digest == table.digest()
        on_disk = read_manifest(tmp_path / "manifest.tsv")
        assert on_disk.entries == manifest.entries
        assert on_disk.content_digest() == manifest.content_digest()
        assert read_stats(tmp_path / "stats.txt") == table.stats

    def test_rerun_is_byte_identical_modulo_timestamp(self, tmp_path):
        table = random_table(vocab=40, dim=12, seed=2)
        m1 = encode_corpus(_toy_records(table, n=4), table, PARAMS, tmp_path / "a")
        m2 = encode_corpus(_toy_records(table, n=4), table, PARAMS, tmp_path / "b")
        assert m1.content_digest() == m2.content_digest()
        for e in m1.entries:
            assert (tmp_path / "a" / e.path).read_bytes() == (tmp_path / "b" / e.path).read_bytes()

    def test_parallel_tree_matches_serial(self, tmp_path):
        table = random_table(vocab=60, dim=12, seed=3)
        records = _toy_records(table, n=40, words_per_doc=25)
        m1 = encode_corpus(records, table, PARAMS, tmp_path / "serial", workers=1)
        m2 = encode_corpus(records, table, PARAMS, tmp_path / "pool", workers=2)
        assert m1.content_digest() == m2.content_digest()
        files1 = sorted(p.relative_to(tmp_path / "serial") for p in (tmp_path / "serial").rglob("*.png"))
        files2 = sorted(p.relative_to(tmp_path / "pool") for p in (tmp_path / "pool").rglob("*.png"))
        assert files1 == files2
        for rel in files1:
            assert (tmp_path / "serial" / rel).read_bytes() == (tmp_path / "pool" / rel).read_bytes()

    def test_all_oov_document_renders_background(self, tmp_path, caplog):
        from textpix import CorpusRecord, Document

        table = random_table(vocab=10, dim=12, seed=4)
        rec = CorpusRecord(
            document=Document(id="oov-1", label=1, text="totally unknown words here"),
            split="train",
        )
        with caplog.at_level("WARNING"):
            manifest = encode_corpus([rec], table, PARAMS, tmp_path)
        entry = manifest.entries[0]
        assert entry.oov_count == entry.token_count == 4
        img = read_png(tmp_path / entry.path)
        assert np.all(img.pixels == np.array(PARAMS.background, dtype=np.uint8))
        assert any("out of vocabulary" in r.message for r in caplog.records)

    def test_label_distribution_preserved(self, tmp_path):
        table = random_table(vocab=40, dim=12, seed=5)
        records = _toy_records(table, n=10)
        manifest = encode_corpus(records, table, PARAMS, tmp_path)
        want = sorted(str(r.document.label) for r in records)
        got = sorted(e.label for e in manifest.entries)
        assert want == got

    def test_strict_mode_fails_on_record_error(self, tmp_path, monkeypatch):
        import textpix.corpus as corpus_mod

        table = random_table(vocab=40, dim=12, seed=6)
        records = _toy_records(table, n=3)

        real = corpus_mod.write_png

        def boom(img, sink):
            if "0001" in str(sink):
                raise OSError("disk full")
            real(img, sink)

        monkeypatch.setattr(corpus_mod, "write_png", boom)
        with pytest.raises(EncodeError, match="train-0001"):
            encode_corpus(records, table, PARAMS, tmp_path / "strict", workers=1)

    def test_lenient_mode_records_error_and_continues(self, tmp_path, monkeypatch):
        import textpix.corpus as corpus_mod

        table = random_table(vocab=40, dim=12, seed=6)
        records = _toy_records(table, n=3)

        real = corpus_mod.write_png

        def boom(img, sink):
            if "0001" in str(sink):
                raise OSError("disk full")
            real(img, sink)

        monkeypatch.setattr(corpus_mod, "write_png", boom)
        manifest = encode_corpus(
            records, table, PARAMS, tmp_path / "lenient", workers=1, strict=False
        )
        assert len(manifest.entries) == 3
        errors = [e for e in manifest.entries if e.error]
        assert len(errors) == 1 and errors[0].id == "train-0001"
        assert "disk full" in errors[0].error

    def test_crop_policy_materializes_crops(self, tmp_path):
        from textpix import CropPolicy

        table = random_table(vocab=40, dim=12, seed=7)
        policy = CropPolicy(crop_size=80, count=3, seed=1)
        manifest = encode_corpus(_toy_records(table, n=2), table, PARAMS, tmp_path, policy=policy)
        for e in manifest.entries:
            base = tmp_path / e.path
            for k in range(3):
                crop = base.with_name(f"{e.id}.crop{k}.png")
                assert crop.is_file()
                assert read_png(crop).pixels.shape == (80, 80, 3)

    def test_throughput_reported(self, tmp_path):
        table = random_table(vocab=40, dim=12, seed=8)
        manifest = encode_corpus(_toy_records(table, n=5), table, PARAMS, tmp_path)
        assert manifest.docs_per_second > 0
        assert manifest.elapsed_seconds > 0

    def test_plans_sidecars_written_when_asked(self, tmp_path):
        from textpix import read_plan

        table = random_table(vocab=40, dim=12, seed=9)
        manifest = encode_corpus(
            _toy_records(table, n=2), table, PARAMS, tmp_path, write_plans=True
        )
        for e in manifest.entries:
            plan = read_plan((tmp_path / e.path).with_suffix(".plan"))
            assert plan.params_digest == PARAMS.digest()


class TestManifestFormat:
    def test_content_digest_ignores_created(self):
        entries = ()
        a = Manifest("p", "t", "s", "2001-01-01T00:00:00+00:00", entries)
        b = Manifest("p", "t", "s", "2020-12-31T23:59:59+00:00", entries)
        assert a.content_digest() == b.content_digest()

    def test_round_trip_with_error_field(self, tmp_path):
        from textpix import ManifestEntry, write_manifest

        entry = ManifestEntry(
            id="x", label="2", split="test", path="test/2/x.png",
            token_count=5, oov_count=1, overflow_count=0, error="boom happened",
        )
        m = Manifest("p", "t", "s", "now", (entry,))
        write_manifest(m, tmp_path / "m.tsv")
        back = read_manifest(tmp_path / "m.tsv")
        assert back.entries == (entry,)
        assert back.created == "now"

    def test_categories_table_covers_reference_groups(self):
        assert set(NEWS20_CATEGORIES) == {"comp", "politics", "rec", "religion"}
