"""Toy training loop over loaded descriptor datasets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .dataset import DatasetView
from .model import SmallConvNet


@dataclass
class TrainResult:
    accuracy: float
    train_accuracy: float
    epoch_losses: list[float]
    n_train: int
    n_test: int
    n_classes: int
    seed: int
    shuffled_labels: bool

    def write_report(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


def _to_torch(features: np.ndarray, labels: np.ndarray):
    # channels-last files -> channels-first tensors
    x = torch.from_numpy(features.astype(np.float32)).permute(0, 3, 1, 2).contiguous()
    return x, torch.from_numpy(labels)


def toy_train(
    train_view: DatasetView,
    test_view: DatasetView,
    epochs: int = 30,
    batch_size: int = 16,
    lr: float = 1e-3,
    seed: int = 0,
    orientation: int = 0,
    shuffle_labels: bool = False,
) -> TrainResult:
    """Train the toy CNN on one orientation view and report test accuracy.

    ``shuffle_labels`` permutes the training labels (chance-level control:
    test accuracy should sit near 1 / n_classes).  Fully deterministic for
    a fixed seed.
    """
    x_train, y_train = _to_torch(*train_view.stacked(orientation))
    x_test, y_test = _to_torch(*test_view.stacked(orientation))
    n_classes = max(train_view.n_classes, test_view.n_classes)

    if shuffle_labels:
        perm = np.random.default_rng(seed).permutation(len(y_train))
        y_train = y_train[perm]

    torch.manual_seed(seed)
    model = SmallConvNet(x_train.shape[1], n_classes)
    # stand-in for transferring RGB-pretrained filters to c channels
    bank = torch.randn(16, 3, 3, 3) * 0.1
    model.init_first_conv_from_bank(bank)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    criterion = nn.CrossEntropyLoss()

    generator = torch.Generator().manual_seed(seed)
    epoch_losses = []
    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(x_train), generator=generator)
        losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            optimizer.zero_grad()
            loss = criterion(model(x_train[batch]), y_train[batch])
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        epoch_losses.append(float(np.mean(losses)))

    model.eval()
    with torch.no_grad():
        accuracy = float((model(x_test).argmax(dim=1) == y_test).float().mean())
        train_accuracy = float(
            (model(x_train).argmax(dim=1) == y_train).float().mean()
        )
    return TrainResult(
        accuracy=accuracy,
        train_accuracy=train_accuracy,
        epoch_losses=epoch_losses,
        n_train=len(x_train),
        n_test=len(x_test),
        n_classes=n_classes,
        seed=seed,
        shuffled_labels=shuffle_labels,
    )
