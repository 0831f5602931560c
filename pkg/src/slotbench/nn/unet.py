"""U-Net with a configurable number of active skip connections."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigurationError, ShapeError


@dataclass
class UNetConfig:
    depth: int = 5
    channels: tuple[int, ...] = (16, 32, 64, 64, 64, 64)  # stem + one per down level
    num_skip_connections: int = 5
    in_channels: int = 4  # image (3) + scope (1)
    out_channels: int = 1

    def validate(self) -> None:
        if len(self.channels) != self.depth + 1:
            raise ConfigurationError(
                f"channels needs depth+1={self.depth + 1} entries, got {len(self.channels)}"
            )
        if not 0 <= self.num_skip_connections <= self.depth:
            raise ConfigurationError(
                f"num_skip_connections={self.num_skip_connections} outside [0, {self.depth}]"
            )


def _double_conv(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        nn.LeakyReLU(0.01),
        nn.Conv2d(cout, cout, 3, padding=1),
        nn.LeakyReLU(0.01),
    )


class UNet(nn.Module):
    """Down/up conv pyramid emitting same-resolution logits.

    With ``num_skip_connections = s``, exactly the ``s`` innermost (deepest)
    skip paths are concatenated on the way up; the remaining up blocks see
    only the upsampled tensor.
    """

    def __init__(self, config: UNetConfig):
        super().__init__()
        config.validate()
        self.config = config
        d, ch = config.depth, config.channels

        self.stem = _double_conv(config.in_channels, ch[0])
        self.down_blocks = nn.ModuleList(
            [_double_conv(ch[i], ch[i + 1]) for i in range(d)]
        )
        self.pool = nn.MaxPool2d(2)

        # skip level i lives at resolution H / 2^i; active iff i >= d - s
        self.active_skips = frozenset(range(d - config.num_skip_connections, d))

        self.up_convs = nn.ModuleList()
        self.up_blocks = nn.ModuleList()
        for i in reversed(range(d)):
            self.up_convs.append(nn.Conv2d(ch[i + 1], ch[i], 3, padding=1))
            cin = 2 * ch[i] if i in self.active_skips else ch[i]
            self.up_blocks.append(_double_conv(cin, ch[i]))
        self.head = nn.Conv2d(ch[0], config.out_channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        d = self.config.depth
        h, w = x.shape[-2:]
        if h % (1 << d) or w % (1 << d):
            raise ShapeError(f"input {h}x{w} not divisible by 2^{d}")

        skips = []
        y = self.stem(x)
        for block in self.down_blocks:
            skips.append(y)
            y = block(self.pool(y))

        for step, (up, block) in enumerate(zip(self.up_convs, self.up_blocks)):
            i = d - 1 - step
            y = up(nn.functional.interpolate(y, scale_factor=2, mode="nearest"))
            if i in self.active_skips:
                y = torch.cat([y, skips[i]], dim=1)
            y = block(y)
        return self.head(y)
