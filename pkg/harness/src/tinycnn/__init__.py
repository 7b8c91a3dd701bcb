"""tinycnn: a deliberately small CNN harness for split/label PNG trees.

Trains on random square crops and evaluates on the single center crop.
The augmentation pipeline contains no horizontal or vertical flip: these
trees encode text reading order, and mirroring breaks it.
"""

from .data import FolderDataset, build_eval_transform, build_train_transform, scan_tree
from .model import SmallCnn
from .train import HarnessConfig, TrainResult, train_and_eval

__version__ = "0.1.0"

__all__ = [
    "FolderDataset",
    "HarnessConfig",
    "SmallCnn",
    "TrainResult",
    "build_eval_transform",
    "build_train_transform",
    "scan_tree",
    "train_and_eval",
]
