"""Toy CNN classifier for grid descriptors."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn


def adapt_first_layer(weights, layers: int) -> torch.Tensor:
    """Adapt a 3-channel filter bank to ``layers`` input channels.

    Channel k of the result is channel k mod 3 of the input, so RGB-style
    pretrained filters can be reused on descriptors of any depth.
    """
    bank = torch.as_tensor(np.asarray(weights))
    if bank.ndim != 4 or bank.shape[1] != 3:
        raise ValueError("expected a filter bank of shape (out, 3, kh, kw)")
    if layers < 1:
        raise ValueError("layers must be >= 1")
    return bank[:, [k % 3 for k in range(layers)]].clone()


class SmallConvNet(nn.Module):
    """Two conv blocks and a pooled linear head; minutes on CPU."""

    def __init__(self, in_channels: int, n_classes: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, 16, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(16, 32, kernel_size=3, padding=1)
        self.pool = nn.MaxPool2d(4)
        self.head_pool = nn.AdaptiveAvgPool2d((4, 4))
        self.fc = nn.Linear(32 * 4 * 4, n_classes)

    def init_first_conv_from_bank(self, bank) -> None:
        """Seed conv1 with a channel-repeated 3-channel filter bank."""
        adapted = adapt_first_layer(bank, self.conv1.in_channels)
        if adapted.shape != self.conv1.weight.shape:
            raise ValueError(
                f"bank adapts to {tuple(adapted.shape)}, conv1 expects "
                f"{tuple(self.conv1.weight.shape)}"
            )
        with torch.no_grad():
            self.conv1.weight.copy_(adapted)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.head_pool(torch.relu(self.conv2(x)))
        return self.fc(torch.flatten(x, 1))
