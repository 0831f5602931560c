"""Slot Attention autoencoder with baseline and residual architectures.

Iterative attention pools encoder features into K exchangeable slot
vectors; a shared spatial-broadcast decoder renders appearance and an
alpha logit per slot, combined by a softmax over slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigurationError, NumericalError
from ..nn.broadcast import spatial_broadcast
from ..nn.encoder import ConvEncoder, ConvEncoderConfig, SoftPositionEmbed
from ..nn.residual import (
    ResidualStack,
    table3_decoder_config,
    table3_encoder_config,
)
from .common import SlotDecomposition

_EPS = 1e-8


@dataclass
class SlotAttentionConfig:
    num_slots: int = 6
    slot_size: int = 64
    iterations: int = 3
    resolution: tuple[int, int] = (64, 64)
    architecture: str = "baseline"     # baseline | residual
    dataset_flavor: str = "sprites"    # downscale count of the residual stacks
    encoder_channels: int = 64         # baseline conv width
    decoder_channels: tuple[int, ...] = (64, 64, 64, 64)  # baseline decoder
    broadcast_size: int | None = None  # None: broadcast at output resolution
    mlp_hidden: int | None = None

    def validate(self) -> None:
        if self.num_slots < 2:
            raise ConfigurationError("num_slots must be >= 2")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.architecture not in ("baseline", "residual"):
            raise ConfigurationError(f"unknown architecture {self.architecture!r}")
        if self.dataset_flavor not in ("sprites", "clevr"):
            raise ConfigurationError(f"unknown dataset_flavor {self.dataset_flavor!r}")

    @property
    def hidden(self) -> int:
        return self.mlp_hidden if self.mlp_hidden is not None else max(self.slot_size, 128)


class SlotAttentionModule(nn.Module):
    """The iterative attention update over a set of feature vectors."""

    def __init__(self, feature_size: int, slot_size: int, iterations: int,
                 hidden: int):
        super().__init__()
        self.slot_size = slot_size
        self.iterations = iterations
        self.scale = slot_size ** -0.5

        self.slots_mu = nn.Parameter(torch.randn(1, 1, slot_size) * slot_size ** -0.5)
        self.slots_logsigma = nn.Parameter(torch.zeros(1, 1, slot_size))

        self.norm_input = nn.LayerNorm(feature_size)
        self.norm_slots = nn.LayerNorm(slot_size)
        self.norm_pre_ff = nn.LayerNorm(slot_size)

        self.to_q = nn.Linear(slot_size, slot_size, bias=False)
        self.to_k = nn.Linear(feature_size, slot_size, bias=False)
        self.to_v = nn.Linear(feature_size, slot_size, bias=False)

        self.gru = nn.GRUCell(slot_size, slot_size)
        self.mlp = nn.Sequential(
            nn.Linear(slot_size, hidden),
            nn.LeakyReLU(0.01),
            nn.Linear(hidden, slot_size),
        )

    def init_slots(self, batch: int, num_slots: int, *,
                   generator: torch.Generator | None = None,
                   deterministic: bool = False) -> torch.Tensor:
        """mu + exp(logsigma) * eps with shared, learned mu and logsigma;
        deterministic mode collapses to mu."""
        mu = self.slots_mu.expand(batch, num_slots, -1)
        if deterministic:
            return mu.clone()
        eps = torch.randn(batch, num_slots, self.slot_size,
                          generator=generator, device=mu.device, dtype=mu.dtype)
        return mu + self.slots_logsigma.exp() * eps

    def iterate(self, features: torch.Tensor, slots: torch.Tensor,
                iterations: int | None = None
                ) -> tuple[torch.Tensor, torch.Tensor]:
        """features: (B, N, F); slots: (B, K, D).  Returns final slots and
        the last attention map (B, K, N), normalized over slots."""
        t = iterations if iterations is not None else self.iterations
        if t < 1:
            raise ConfigurationError("attention needs at least one iteration")
        b, n, _ = features.shape
        k = slots.shape[1]
        feats = self.norm_input(features)
        key = self.to_k(feats)
        value = self.to_v(feats)

        attn = None
        for _ in range(t):
            prev = slots
            q = self.to_q(self.norm_slots(slots))
            logits = torch.einsum("bkd,bnd->bkn", q, key) * self.scale
            attn = F.softmax(logits, dim=1)
            weights = attn + _EPS
            weights = weights / weights.sum(dim=2, keepdim=True)
            updates = torch.einsum("bkn,bnd->bkd", weights, value)
            slots = self.gru(updates.reshape(b * k, -1), prev.reshape(b * k, -1))
            slots = slots.reshape(b, k, -1)
            slots = slots + self.mlp(self.norm_pre_ff(slots))
        return slots, attn


class _BaselineDecoder(nn.Module):
    def __init__(self, config: SlotAttentionConfig):
        super().__init__()
        h, w = config.resolution
        self.broadcast = (config.broadcast_size or h, config.broadcast_size or w)
        if h % self.broadcast[0] or w % self.broadcast[1]:
            raise ConfigurationError("broadcast size must divide the resolution")
        layers: list[nn.Module] = []
        cin = config.slot_size + 2
        scale = h // self.broadcast[0]
        for c in config.decoder_channels:
            if scale > 1:
                layers.append(nn.Upsample(scale_factor=2, mode="nearest"))
                scale //= 2
            layers += [nn.Conv2d(cin, c, 5, padding=2), nn.LeakyReLU(0.01)]
            cin = c
        if scale != 1:
            raise ConfigurationError("decoder has too few layers for the broadcast size")
        layers.append(nn.Conv2d(cin, 4, 3, padding=1))
        self.convs = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.convs(spatial_broadcast(z, *self.broadcast))


class _ResidualDecoder(nn.Module):
    def __init__(self, config: SlotAttentionConfig):
        super().__init__()
        h, _ = config.resolution
        stack_cfg = table3_decoder_config(config.dataset_flavor,
                                          in_channels=config.slot_size + 2)
        ups = sum(1 for k in stack_cfg.resample.values() if k == "up")
        required = h // (1 << ups)
        size = config.broadcast_size or required
        if size * (1 << ups) != h:
            raise ConfigurationError(
                f"broadcast size {size} with {ups} upscales cannot reach {h}")
        self.broadcast = (size, size)
        self.stack = ResidualStack(stack_cfg)
        self.head = nn.Conv2d(self.stack.out_channels, 4, 3, padding=1)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.head(self.stack(spatial_broadcast(z, *self.broadcast)))


class SlotAttentionAutoencoder(nn.Module):
    def __init__(self, config: SlotAttentionConfig):
        super().__init__()
        config.validate()
        self.config = config
        if config.architecture == "baseline":
            self.encoder = ConvEncoder(ConvEncoderConfig(channels=config.encoder_channels))
            feature_size = config.encoder_channels
            self.encoder_position = None  # ConvEncoder embeds position itself
            self.decoder = _BaselineDecoder(config)
        else:
            self.encoder = ResidualStack(table3_encoder_config(config.dataset_flavor))
            feature_size = self.encoder.out_channels
            self.encoder_position = SoftPositionEmbed(feature_size)
            self.decoder = _ResidualDecoder(config)

        self.feature_norm = nn.LayerNorm(feature_size)
        self.feature_mlp = nn.Sequential(
            nn.Linear(feature_size, feature_size),
            nn.LeakyReLU(0.01),
            nn.Linear(feature_size, feature_size),
        )
        self.slot_attention = SlotAttentionModule(
            feature_size, config.slot_size, config.iterations, config.hidden)

    def encode(self, image: torch.Tensor) -> torch.Tensor:
        features = self.encoder(image)
        if self.encoder_position is not None:
            features = self.encoder_position(features)
        b, c, h, w = features.shape
        flat = features.reshape(b, c, h * w).transpose(1, 2)
        return self.feature_mlp(self.feature_norm(flat))

    def decode_slots(self, slots: torch.Tensor
                     ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Shared decoder per slot: returns (appearance, alpha_logits,
        reconstruction, masks); masks are the softmax over slots."""
        b, k, d = slots.shape
        out = self.decoder(slots.reshape(b * k, d))
        h, w = out.shape[-2:]
        out = out.reshape(b, k, 4, h, w)
        appearance = out[:, :, :3]
        alpha_logits = out[:, :, 3]
        masks = F.softmax(alpha_logits, dim=1)
        reconstruction = (masks.unsqueeze(2) * appearance).sum(dim=1)
        return appearance, alpha_logits, reconstruction, masks

    def forward(self, image: torch.Tensor, *,
                generator: torch.Generator | None = None,
                initial_slots: torch.Tensor | None = None) -> SlotDecomposition:
        features = self.encode(image)
        if initial_slots is None:
            initial_slots = self.slot_attention.init_slots(
                image.shape[0], self.config.num_slots,
                generator=generator, deterministic=not self.training)
        slots, attention = self.slot_attention.iterate(features, initial_slots)
        appearance, alpha_logits, reconstruction, masks = self.decode_slots(slots)
        if not torch.isfinite(reconstruction).all():
            raise NumericalError("non-finite reconstruction in slot decoder")
        return SlotDecomposition(
            masks=masks,
            appearance=appearance,
            latents=slots,
            reconstruction=reconstruction,
            mask_logits=alpha_logits,
            attention=attention,
        )


def reconstruction_loss(decomp: SlotDecomposition, image: torch.Tensor) -> torch.Tensor:
    return F.mse_loss(decomp.reconstruction, image)
