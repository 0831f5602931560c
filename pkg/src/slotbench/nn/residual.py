"""ReZero residual stacks with interleaved resampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from ..errors import ConfigurationError


@dataclass
class ResidualStackConfig:
    """Widths are per block; ``resample[i]`` inserts a down/up step before
    block ``i`` (``i == len(widths)`` appends one after the last block)."""

    widths: tuple[int, ...]
    resample: dict[int, str] = field(default_factory=dict)
    in_channels: int | None = None
    negative_slope: float = 0.01

    def validate(self) -> None:
        if not self.widths:
            raise ConfigurationError("residual stack needs at least one block")
        for pos, kind in self.resample.items():
            if not 0 <= pos <= len(self.widths):
                raise ConfigurationError(f"resample position {pos} out of range")
            if kind not in ("down", "up"):
                raise ConfigurationError(f"unknown resample kind {kind!r}")


class ReZeroBlock(nn.Module):
    """Two convolutions gated by a scalar initialized to zero, so the block
    is exactly the identity at initialization."""

    def __init__(self, channels: int, negative_slope: float = 0.01):
        super().__init__()
        self.branch = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.LeakyReLU(negative_slope),
            nn.Conv2d(channels, channels, 3, padding=1),
        )
        self.gate = nn.Parameter(torch.zeros(()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.gate * self.branch(x)


def _downscale(channels: int) -> nn.Module:
    return nn.Conv2d(channels, channels, 3, stride=2, padding=1)


class _Upscale(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return self.conv(nn.functional.interpolate(x, scale_factor=2, mode="nearest"))


class ResidualStack(nn.Module):
    """Stack of ReZero blocks; channel changes are 1x1 projections at block
    boundaries and resampling is stride-2 conv / nearest-upsample + conv."""

    def __init__(self, config: ResidualStackConfig):
        super().__init__()
        config.validate()
        self.config = config
        ops: list[nn.Module] = []
        skeleton: list[bool] = []  # True where the op is not a residual block

        current = config.widths[0]
        if config.in_channels is not None:
            ops.append(nn.Conv2d(config.in_channels, current, 3, padding=1))
            skeleton.append(True)

        for i, w in enumerate(config.widths):
            kind = config.resample.get(i)
            if kind is not None:
                ops.append(_downscale(current) if kind == "down" else _Upscale(current))
                skeleton.append(True)
            if w != current:
                ops.append(nn.Conv2d(current, w, 1))
                skeleton.append(True)
                current = w
            ops.append(ReZeroBlock(w, config.negative_slope))
            skeleton.append(False)

        kind = config.resample.get(len(config.widths))
        if kind is not None:
            ops.append(_downscale(current) if kind == "down" else _Upscale(current))
            skeleton.append(True)

        self.ops = nn.ModuleList(ops)
        self._skeleton_mask = skeleton
        self.out_channels = current

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for op in self.ops:
            x = op(x)
        return x

    def skeleton_forward(self, x: torch.Tensor) -> torch.Tensor:
        """Only the channel-mapping and resampling ops, skipping every
        residual block; equals forward() while all gates are zero."""
        for op, keep in zip(self.ops, self._skeleton_mask):
            if keep:
                x = op(x)
        return x


def table3_encoder_config(dataset: str = "sprites") -> ResidualStackConfig:
    """16-block encoder: 8 at 64, 4 at 128, 4 at 256; one downscale for
    sprites, two for clevr."""
    resample = {8: "down"} if dataset == "sprites" else {4: "down", 8: "down"}
    return ResidualStackConfig(
        widths=(64,) * 8 + (128,) * 4 + (256,) * 4,
        resample=resample,
        in_channels=3,
    )


def table3_decoder_config(dataset: str = "sprites", in_channels: int | None = None
                          ) -> ResidualStackConfig:
    """Mirror of the encoder: 4 at 256, 4 at 128, 8 at 64 with upscaling
    where the encoder downscales."""
    resample = {8: "up"} if dataset == "sprites" else {8: "up", 12: "up"}
    return ResidualStackConfig(
        widths=(256,) * 4 + (128,) * 4 + (64,) * 8,
        resample=resample,
        in_channels=in_channels,
    )
