"""Corpus builders for harness tests.

Trees are produced by the textpix CLI (the encoder's external interface);
this package never imports the encoder.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np

ENCODE_PARAMS = [
    "--size", "64", "--d", "12", "--V", "2", "--P", "4", "--s", "4",
]
IMAGE_SIZE = 64


def write_cluster_embeddings(path: Path, per_class: int = 60, dim: int = 12, seed: int = 0):
    """Two disjoint vocabularies whose vectors sit in separated clusters."""
    rng = np.random.default_rng(seed)
    lines = [f"{2 * per_class} {dim}\n"]
    for prefix, center in (("a", -3.0), ("b", 3.0)):
        for i in range(per_class):
            vec = rng.normal(center, 0.5, size=dim)
            lines.append(f"{prefix}{i:04d} " + " ".join(f"{x:.6f}" for x in vec) + "\n")
    path.write_text("".join(lines))
    return [f"a{i:04d}" for i in range(per_class)], [f"b{i:04d}" for i in range(per_class)]


def write_corpus_csv(path: Path, vocab_by_label: dict[int, list[str]], n_per_class: int,
                     tokens_per_doc: int, seed: int, shuffle_labels: bool = False):
    rng = np.random.default_rng(seed)
    rows = []
    for label, vocab in vocab_by_label.items():
        for _ in range(n_per_class):
            words = " ".join(rng.choice(vocab, size=tokens_per_doc))
            out_label = int(rng.choice(list(vocab_by_label))) if shuffle_labels else label
            rows.append(f'"{out_label}","","{words}"\n')
    path.write_text("".join(rows))


def run_textpix_encode(emb: Path, train_csv: Path, test_csv: Path, out: Path):
    cmd = [
        sys.executable, "-m", "textpix.cli", "encode",
        "--emb", str(emb),
        "--in", f"{train_csv}:train", "--in", f"{test_csv}:test",
        "--out", str(out), "--workers", "1", *ENCODE_PARAMS,
    ]
    subprocess.run(cmd, check=True, capture_output=True, text=True)


def build_two_class_corpus(
    root: Path,
    n_train_per_class: int = 150,
    n_test_per_class: int = 50,
    seed: int = 0,
    shuffle_labels: bool = False,
) -> Path:
    """Encode a synthetic 2-class corpus and return the tree root."""
    root.mkdir(parents=True, exist_ok=True)
    vocab_a, vocab_b = write_cluster_embeddings(root / "emb.txt", seed=seed)
    by_label = {1: vocab_a, 2: vocab_b}
    write_corpus_csv(root / "train.csv", by_label, n_train_per_class, 15,
                     seed + 1, shuffle_labels=shuffle_labels)
    write_corpus_csv(root / "test.csv", by_label, n_test_per_class, 15,
                     seed + 2, shuffle_labels=shuffle_labels)
    out = root / "tree"
    run_textpix_encode(root / "emb.txt", root / "train.csv", root / "test.csv", out)
    return out
