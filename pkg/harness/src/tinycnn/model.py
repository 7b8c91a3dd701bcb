"""A three-conv-block classifier, small enough for minutes-scale CPU runs."""

from __future__ import annotations

import torch
from torch import nn


class SmallCnn(nn.Module):
    """Conv-ReLU-pool x3, global average pool, linear head.

    The first convolution's stride must stay at or below the superpixel side
    of the encoded images (4 by default), otherwise the convolution skips
    entire superpixels; 2 is a safe default.
    """

    def __init__(self, num_classes: int, first_stride: int = 2):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, kernel_size=3, stride=first_stride, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(16, 32, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(32, 64, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Linear(64, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x).flatten(1))
