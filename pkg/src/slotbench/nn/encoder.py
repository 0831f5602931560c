"""Baseline convolutional encoder with a soft position embedding."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class ConvEncoderConfig:
    in_channels: int = 3
    channels: int = 64
    layers: int = 4
    kernel: int = 5
    use_position: bool = True


def position_grid(height: int, width: int, *, dtype=torch.float32, device=None
                  ) -> torch.Tensor:
    """(4, H, W) grid of (x, y, 1-x, 1-y) in [0, 1]."""
    x = torch.linspace(0.0, 1.0, width, dtype=dtype, device=device)
    y = torch.linspace(0.0, 1.0, height, dtype=dtype, device=device)
    gx = x.view(1, 1, width).expand(1, height, width)
    gy = y.view(1, height, 1).expand(1, height, width)
    return torch.cat([gx, gy, 1.0 - gx, 1.0 - gy], dim=0)


class SoftPositionEmbed(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.proj = nn.Linear(4, channels)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        h, w = features.shape[-2:]
        grid = position_grid(h, w, dtype=features.dtype, device=features.device)
        emb = self.proj(grid.permute(1, 2, 0)).permute(2, 0, 1)
        return features + emb.unsqueeze(0)


class ConvEncoder(nn.Module):
    """Same-resolution conv stack; the position embedding is added after the
    final activation."""

    def __init__(self, config: ConvEncoderConfig):
        super().__init__()
        self.config = config
        pad = config.kernel // 2
        layers: list[nn.Module] = []
        cin = config.in_channels
        for _ in range(config.layers):
            layers.append(nn.Conv2d(cin, config.channels, config.kernel, padding=pad))
            layers.append(nn.LeakyReLU(0.01))
            cin = config.channels
        self.convs = nn.Sequential(*layers)
        self.position = SoftPositionEmbed(config.channels) if config.use_position else None
        self.out_channels = config.channels

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        features = self.convs(image)
        if self.position is not None:
            features = self.position(features)
        return features
