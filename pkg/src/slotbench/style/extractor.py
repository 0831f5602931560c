"""Convolutional feature pyramid used for texture statistics.

The default weight source is a fixed-seed random pyramid so the pipeline
never needs a download; a weights file in the package checkpoint format can
be supplied for higher-quality textures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn

from ..errors import ConfigurationError
from ..nn.checkpoint import load_checkpoint, save_checkpoint

DEFAULT_WIDTHS = (16, 32, 64, 128, 128)


@dataclass
class FeatureExtractorConfig:
    widths: tuple[int, ...] = DEFAULT_WIDTHS
    in_channels: int = 3
    seed: int = 0
    weights_path: str | None = None

    @property
    def layer_names(self) -> tuple[str, ...]:
        return tuple(f"conv{i + 1}" for i in range(len(self.widths)))


class FeatureExtractor(nn.Module):
    """Stack of conv+ReLU stages with average pooling in between; exposes the
    post-activation tensor of every stage by name."""

    def __init__(self, config: FeatureExtractorConfig | None = None):
        super().__init__()
        self.config = config or FeatureExtractorConfig()
        if not self.config.widths:
            raise ConfigurationError("extractor needs at least one stage")
        gen = torch.Generator().manual_seed(self.config.seed)
        convs = []
        cin = self.config.in_channels
        for w in self.config.widths:
            conv = nn.Conv2d(cin, w, 3, padding=1)
            with torch.no_grad():
                fan_in = cin * 9
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=gen) * math.sqrt(2.0 / fan_in)
                )
                conv.bias.zero_()
            convs.append(conv)
            cin = w
        self.convs = nn.ModuleList(convs)
        self.pool = nn.AvgPool2d(2)
        if self.config.weights_path is not None:
            _, state = load_checkpoint(self.config.weights_path)
            self.load_state_dict(state)
        for p in self.parameters():
            p.requires_grad_(False)

    @property
    def layer_names(self) -> tuple[str, ...]:
        return self.config.layer_names

    def forward(self, image: torch.Tensor) -> dict[str, torch.Tensor]:
        """image: (B, C, H, W) in [0, 1] -> named stage activations."""
        feats = {}
        x = image
        for i, conv in enumerate(self.convs):
            x = torch.relu(conv(x))
            feats[f"conv{i + 1}"] = x
            if i + 1 < len(self.convs):
                x = self.pool(x)
        return feats

    def save_weights(self, path: str) -> None:
        save_checkpoint(path, {"widths": list(self.config.widths),
                               "in_channels": self.config.in_channels},
                        dict(self.state_dict()))
