"""Adaptation network and the CIFAR variant of ResNet-18.

The adaptation network is two pointwise convolutions (3 -> m1 -> m2, ReLU
after each); with the defaults m1=8, m2=32 its output on CIFAR inputs is
(N, 32, 32, 32).  The backbone is the standard CIFAR adaptation of
ResNet-18: a 3x3 stem with no max-pool, four stages of two basic blocks.
A width parameter scales every stage for smoke-scale tests; width=64 is
the real network.
"""

from __future__ import annotations

import torch
import torch.nn as nn

ADAPT_M1 = 8
ADAPT_M2 = 32


def adaptation_network(m1: int = ADAPT_M1, m2: int = ADAPT_M2) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(3, m1, kernel_size=1, stride=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(m1, m2, kernel_size=1, stride=1),
        nn.ReLU(inplace=True),
    )


class BasicBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int = 1) -> None:
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, stride=1, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.shortcut = nn.Sequential()
        if stride != 1 or c_in != c_out:
            self.shortcut = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride=stride, bias=False),
                nn.BatchNorm2d(c_out),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = torch.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return torch.relu(out + self.shortcut(x))


class ResNet18(nn.Module):
    def __init__(self, in_channels: int = 3, num_classes: int = 10, width: int = 64) -> None:
        super().__init__()
        w = width
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, w, 3, stride=1, padding=1, bias=False),
            nn.BatchNorm2d(w),
            nn.ReLU(inplace=True),
        )
        stages = []
        c = w
        for c_out, stride in [(w, 1), (2 * w, 2), (4 * w, 2), (8 * w, 2)]:
            stages += [BasicBlock(c, c_out, stride), BasicBlock(c_out, c_out, 1)]
            c = c_out
        self.stages = nn.Sequential(*stages)
        self.head = nn.Sequential(
            nn.AdaptiveAvgPool2d(1), nn.Flatten(), nn.Linear(8 * w, num_classes)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.stages(self.stem(x)))


def build_classifier(adaptation: bool, width: int = 64) -> nn.Module:
    """Adaptation stack (when enabled) feeding the backbone, trained jointly."""
    backbone_in = ADAPT_M2 if adaptation else 3
    backbone = ResNet18(in_channels=backbone_in, width=width)
    if adaptation:
        return nn.Sequential(adaptation_network(), backbone)
    return backbone
