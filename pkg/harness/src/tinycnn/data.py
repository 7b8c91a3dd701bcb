"""Dataset over a ``<split>/<label>/*.png`` tree and the crop transforms.

The tree layout is the one image-encoding pipelines emit: one directory per
class under each split, one PNG per document. Classes are inferred from the
directory names and must agree between splits.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch
from PIL import Image
from torch.utils.data import Dataset
from torchvision import transforms

IMAGE_SUFFIXES = (".png",)


class DataError(ValueError):
    """Bad tree layout or inconsistent images."""


@dataclass(frozen=True)
class TreeSplit:
    """One split's samples: (path, class index) pairs plus the class names."""

    samples: tuple[tuple[Path, int], ...]
    classes: tuple[str, ...]
    image_size: tuple[int, int]  # (width, height), uniform across the split


def scan_tree(split_dir: Path | str) -> TreeSplit:
    """Index one split directory, validating layout and image sizes.

    Raises:
        DataError: missing directory, a class directory with no images, or
            images of differing sizes.
    """
    split_dir = Path(split_dir)
    if not split_dir.is_dir():
        raise DataError(f"split directory not found: {split_dir}")
    class_dirs = sorted(d for d in split_dir.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataError(f"no class directories under {split_dir}")

    classes = tuple(d.name for d in class_dirs)
    samples: list[tuple[Path, int]] = []
    size: tuple[int, int] | None = None
    for idx, d in enumerate(class_dirs):
        files = sorted(
            p for p in d.iterdir()
            if p.suffix in IMAGE_SUFFIXES and ".crop" not in p.name
        )
        if not files:
            raise DataError(f"class directory {d} contains no images")
        for p in files:
            with Image.open(p) as im:  # header only, pixels stay undecoded
                if size is None:
                    size = im.size
                elif im.size != size:
                    raise DataError(
                        f"image size mismatch: {p} is {im.size}, expected {size}"
                    )
            samples.append((p, idx))
    assert size is not None
    return TreeSplit(samples=tuple(samples), classes=classes, image_size=size)


def build_train_transform(crop_size: int) -> transforms.Compose:
    """Random-crop training pipeline. Contains no flip of any kind."""
    return transforms.Compose(
        [
            transforms.RandomCrop(crop_size),
            transforms.ToTensor(),
        ]
    )


def build_eval_transform(crop_size: int) -> transforms.Compose:
    """Single center crop for evaluation."""
    return transforms.Compose(
        [
            transforms.CenterCrop(crop_size),
            transforms.ToTensor(),
        ]
    )


class FolderDataset(Dataset):
    """PNG folder dataset applying a transform at load time."""

    def __init__(self, split: TreeSplit, transform):
        self.split = split
        self.transform = transform

    def __len__(self) -> int:
        return len(self.split.samples)

    def __getitem__(self, i: int) -> tuple[torch.Tensor, int]:
        path, label = self.split.samples[i]
        with Image.open(path) as im:
            img = im.convert("RGB")
        return self.transform(img), label
