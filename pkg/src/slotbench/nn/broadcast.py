"""Spatial broadcast of latent vectors with coordinate channels."""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass
class SpatialBroadcastConfig:
    latent_size: int
    height: int
    width: int

    @property
    def channels(self) -> int:
        # decoder input width: latent plus the two coordinate ramps
        return self.latent_size + 2


def coordinate_ramps(height: int, width: int, *, dtype=torch.float32,
                     device=None) -> torch.Tensor:
    """Two constant channels: x spanning [-1, 1] along width, y along height."""
    xr = torch.linspace(-1.0, 1.0, width, dtype=dtype, device=device)
    yr = torch.linspace(-1.0, 1.0, height, dtype=dtype, device=device)
    x = xr.view(1, 1, width).expand(1, height, width)
    y = yr.view(1, height, 1).expand(1, height, width)
    return torch.cat([x, y], dim=0)


def spatial_broadcast(latent: torch.Tensor, height: int, width: int) -> torch.Tensor:
    """Tile (B, D) latents to (B, D+2, H, W); the last two channels are the
    input-independent coordinate ramps."""
    if latent.dim() == 1:
        latent = latent.unsqueeze(0)
    b, d = latent.shape
    tiled = latent.view(b, d, 1, 1).expand(b, d, height, width)
    coords = coordinate_ramps(height, width, dtype=latent.dtype, device=latent.device)
    return torch.cat([tiled, coords.unsqueeze(0).expand(b, -1, -1, -1)], dim=1)
