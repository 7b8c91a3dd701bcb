"""Training loop, evaluation, and the run report."""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader

from .data import DataError, FolderDataset, build_eval_transform, build_train_transform, scan_tree
from .model import SmallCnn

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarnessConfig:
    """Everything a run needs; classes come from the directory names."""

    data_root: Path
    crop_size: int
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    device: str = "cpu"
    report_path: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "data_root", Path(self.data_root))
        if self.crop_size <= 0:
            raise ValueError("crop_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class TrainResult:
    train_error: float  # percent, final epoch
    test_error: float  # percent, center-crop evaluation
    report_path: Path
    curve: tuple[tuple[int, float, float], ...]  # (epoch, train_error, test_error)


def train_and_eval(config: HarnessConfig) -> TrainResult:
    """Train on random crops, evaluate on the center crop, write the report.

    Deterministic for a fixed seed on a fixed device. Errors are percentages
    (100 x misclassified / total).

    Raises:
        DataError: bad tree, empty class directory, image size mismatch, or
            crop larger than the images.
    """
    torch.manual_seed(config.seed)
    np.random.seed(config.seed)
    random.seed(config.seed)

    train_split = scan_tree(config.data_root / "train")
    test_split = scan_tree(config.data_root / "test")
    if train_split.classes != test_split.classes:
        raise DataError(
            f"class mismatch: train has {train_split.classes}, test has {test_split.classes}"
        )
    for split in (train_split, test_split):
        w, h = split.image_size
        if config.crop_size > min(w, h):
            raise DataError(f"crop_size {config.crop_size} exceeds image size {w}x{h}")
    train_paths = {p.resolve() for p, _ in train_split.samples}
    test_paths = {p.resolve() for p, _ in test_split.samples}
    if train_paths & test_paths:
        raise DataError("train and test splits share image files")

    device = torch.device(config.device)
    train_ds = FolderDataset(train_split, build_train_transform(config.crop_size))
    test_ds = FolderDataset(test_split, build_eval_transform(config.crop_size))
    loader = DataLoader(
        train_ds,
        batch_size=config.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(config.seed),
        num_workers=0,
    )
    eval_loader = DataLoader(test_ds, batch_size=config.batch_size, num_workers=0)

    model = SmallCnn(num_classes=len(train_split.classes)).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    curve: list[tuple[int, float, float]] = []
    t0 = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        model.train()
        seen = wrong = 0
        for x, y in loader:
            x, y = x.to(device), y.to(device)
            optimizer.zero_grad()
            logits = model(x)
            loss = loss_fn(logits, y)
            loss.backward()
            optimizer.step()
            wrong += int((logits.argmax(dim=1) != y).sum())
            seen += len(y)
        train_error = 100.0 * wrong / seen
        test_error = evaluate(model, eval_loader, device)
        curve.append((epoch, train_error, test_error))
        logger.info(
            "epoch %d: train_error=%.2f%% test_error=%.2f%%", epoch, train_error, test_error
        )

    elapsed = time.perf_counter() - t0
    report_path = (
        Path(config.report_path)
        if config.report_path is not None
        else config.data_root / "tinycnn-report.txt"
    )
    final_train, final_test = curve[-1][1], curve[-1][2]
    _write_report(report_path, config, train_split.classes, curve, elapsed)
    return TrainResult(
        train_error=final_train,
        test_error=final_test,
        report_path=report_path,
        curve=tuple(curve),
    )


def evaluate(model: nn.Module, loader: DataLoader, device: torch.device) -> float:
    """Percentage error on the loader's dataset."""
    model.eval()
    wrong = total = 0
    with torch.no_grad():
        for x, y in loader:
            x, y = x.to(device), y.to(device)
            wrong += int((model(x).argmax(dim=1) != y).sum())
            total += len(y)
    return 100.0 * wrong / total


def _write_report(path: Path, config: HarnessConfig, classes, curve, elapsed: float) -> None:
    lines = [
        "#tinycnn-report v1\n",
        (
            f"#config data_root={config.data_root} crop={config.crop_size} "
            f"epochs={config.epochs} batch={config.batch_size} lr={config.learning_rate} "
            f"seed={config.seed} device={config.device}\n"
        ),
        f"#classes {' '.join(classes)}\n",
        f"#elapsed_seconds {elapsed:.2f}\n",
    ]
    for epoch, train_error, test_error in curve:
        lines.append(f"epoch {epoch} train_error={train_error:.4f} test_error={test_error:.4f}\n")
    lines.append(f"test_error={curve[-1][2]:.4f}\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(lines), encoding="utf-8")
