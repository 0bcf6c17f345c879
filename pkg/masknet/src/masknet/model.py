"""Convolutional-recurrent mask estimator.

Input is a batch of 21-frame magnitude windows shaped (batch, channels, 21,
257). Three conv blocks (32, 64, 64 filters, 3x3, stride 1, batch norm,
ReLU) each end in 1x4 max pooling that shrinks only the frequency axis, 257
-> 64 -> 16 -> 4. The time axis stays 21 frames so the GRU sees one feature
vector per frame (64 * 4 = 256 wide). A dense sigmoid head reads the GRU
state at the centre frame and emits the 257-bin mask column for that frame.
"""

from __future__ import annotations

import torch
from torch import nn

from .dataset import HALF, WINDOW
from .errors import SizeError
from .spectra import N_BINS

CONV_FILTERS = (32, 64, 64)
POOL_FREQ = 4
GRU_UNITS = 256


def _pooled_bins() -> int:
    bins = N_BINS
    for _ in CONV_FILTERS:
        bins //= POOL_FREQ
    return bins


class CrnnMask(nn.Module):
    def __init__(self, in_channels: int):
        super().__init__()
        blocks = []
        width = in_channels
        for filters in CONV_FILTERS:
            blocks += [
                nn.Conv2d(width, filters, kernel_size=3, stride=1, padding=1),
                nn.BatchNorm2d(filters),
                nn.ReLU(),
                nn.MaxPool2d(kernel_size=(1, POOL_FREQ)),
            ]
            width = filters
        self.conv = nn.Sequential(*blocks)
        self.gru = nn.GRU(CONV_FILTERS[-1] * _pooled_bins(), GRU_UNITS,
                          batch_first=True)
        self.head = nn.Linear(GRU_UNITS, N_BINS)
        self.in_channels = in_channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != self.in_channels or \
                x.shape[2] != WINDOW or x.shape[3] != N_BINS:
            raise SizeError(f"expected (batch, {self.in_channels}, {WINDOW}, "
                            f"{N_BINS}) windows, got {tuple(x.shape)}")
        h = self.conv(x)  # (B, 64, WINDOW, 4)
        h = h.permute(0, 2, 1, 3).flatten(2)  # (B, WINDOW, 256)
        h, _ = self.gru(h)
        return torch.sigmoid(self.head(h[:, HALF]))
