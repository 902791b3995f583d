"""Single training runs over batch files.

run_experiment only ever reads the batch files named in its config, so an
arm whose files are ciphertext never touches plaintext by construction.
All augmentation and encryption happen upstream (see pipeline); here is
just: load, subset, train, evaluate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn as nn

from .models import build_classifier
from .pipeline import ALL_SCHEMES
from .records import read_batch


def default_lr_drops(epochs: int) -> tuple[int, ...]:
    """Drop the rate by 10x at 1/2 and 3/4 of the schedule (150/225 of 300)."""
    if epochs < 2:
        return ()
    return (epochs // 2, math.ceil(epochs * 3 / 4))


@dataclass(frozen=True)
class ExperimentConfig:
    train_paths: tuple[str, ...]  # one file, or one file per epoch (cycled)
    test_path: str
    encryption: str = "plain"  # reporting label
    augmentation_site: str = "none"  # {client, cloud, none}; metadata
    adaptation: bool = False
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    batch_size: int = 128
    epochs: int = 30
    lr_drop_epochs: Optional[tuple[int, ...]] = None  # None -> default_lr_drops
    subset: float = 1.0
    seed: int = 0
    width: int = 64  # backbone width; 64 is the real ResNet-18

    def __post_init__(self) -> None:
        if not self.train_paths:
            raise ValueError("at least one training batch file is required")
        if self.encryption not in ALL_SCHEMES:
            raise ValueError(f"unknown encryption label {self.encryption!r}")
        if self.augmentation_site not in ("client", "cloud", "none"):
            raise ValueError(f"unknown augmentation site {self.augmentation_site!r}")
        if not (0.0 < self.subset <= 1.0):
            raise ValueError("subset must lie in (0, 1]")
        if self.lr <= 0 or not (0 <= self.momentum < 1) or self.epochs < 0:
            raise ValueError("bad optimizer settings")

    @property
    def drops(self) -> tuple[int, ...]:
        return default_lr_drops(self.epochs) if self.lr_drop_epochs is None else self.lr_drop_epochs


@dataclass
class ExperimentResult:
    accuracy: float  # percent, final test accuracy
    curve: list[float] = field(default_factory=list)  # per-epoch test accuracy


def _to_tensors(labels: np.ndarray, images: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.from_numpy(images.astype(np.float32) / 127.5 - 1.0)
    y = torch.from_numpy(labels.astype(np.int64))
    return x, y


def _subset(labels: np.ndarray, images: np.ndarray, fraction: float, seed: int):
    if fraction >= 1.0:
        return labels, images
    n = max(1, int(len(labels) * fraction))
    order = np.random.default_rng((seed, 0x5EED)).permutation(len(labels))
    sel = order[:n]
    return labels[sel], images[sel]


@torch.no_grad()
def evaluate(model: nn.Module, x: torch.Tensor, y: torch.Tensor, batch_size: int = 512) -> float:
    """Test accuracy in percent."""
    model.eval()
    correct = 0
    for start in range(0, len(y), batch_size):
        logits = model(x[start : start + batch_size])
        correct += int((logits.argmax(dim=1) == y[start : start + batch_size]).sum())
    return 100.0 * correct / len(y)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    for path in (*cfg.train_paths, cfg.test_path):
        if not Path(path).exists():
            raise FileNotFoundError(path)

    torch.manual_seed(cfg.seed)
    model = build_classifier(adaptation=cfg.adaptation, width=cfg.width)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    loss_fn = nn.CrossEntropyLoss()

    test_labels, test_images = read_batch(cfg.test_path)
    x_test, y_test = _to_tensors(test_labels, test_images)

    # Single-file configs load once; per-epoch replica lists stream lazily.
    cached: dict[str, tuple[torch.Tensor, torch.Tensor]] = {}

    def epoch_data(epoch: int) -> tuple[torch.Tensor, torch.Tensor]:
        path = cfg.train_paths[epoch % len(cfg.train_paths)]
        if path not in cached:
            labels, images = _subset(*read_batch(path), cfg.subset, cfg.seed)
            pair = _to_tensors(labels, images)
            if len(cfg.train_paths) == 1:
                cached[path] = pair
            return pair
        return cached[path]

    lr = cfg.lr
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        if epoch in cfg.drops:
            lr /= 10.0
            for group in optimizer.param_groups:
                group["lr"] = lr
        x_train, y_train = epoch_data(epoch)
        order = torch.from_numpy(np.random.default_rng((cfg.seed, epoch)).permutation(len(y_train)))
        model.train()
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x_train[sel]), y_train[sel])
            loss.backward()
            optimizer.step()
        curve.append(evaluate(model, x_test, y_test))

    accuracy = curve[-1] if curve else evaluate(model, x_test, y_test)
    return ExperimentResult(accuracy=accuracy, curve=curve)
