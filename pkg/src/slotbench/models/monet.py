"""MONet: stick-breaking attention over a U-Net plus a shared component VAE.

The attention network claims a fraction of the remaining scope at every
step, computed in log space; the final slot receives whatever scope is
left, so the masks sum to one analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigurationError, NumericalError
from ..nn.broadcast import spatial_broadcast
from ..nn.unet import UNet, UNetConfig
from .common import SlotDecomposition

LOGVAR_RANGE = (-10.0, 10.0)


@dataclass
class LossParams:
    beta: float = 0.5
    gamma: float = 0.5
    sigma_fg: float = 0.11
    sigma_bg: float = 0.09
    # KL(attention || vae) by default; the reverse direction is a config switch
    mask_kl_direction: str = "attention_to_vae"

    def validate(self) -> None:
        if self.beta < 0 or self.gamma < 0:
            raise ConfigurationError("beta and gamma must be >= 0")
        if self.sigma_fg <= 0 or self.sigma_bg <= 0:
            raise ConfigurationError("sigmas must be > 0")
        if self.mask_kl_direction not in ("attention_to_vae", "vae_to_attention"):
            raise ConfigurationError(
                f"unknown mask_kl_direction {self.mask_kl_direction!r}")


@dataclass
class MonetConfig:
    num_slots: int = 6
    latent_size: int = 64
    latent_mlp_size: int = 128
    resolution: tuple[int, int] = (64, 64)
    unet: UNetConfig = field(default_factory=UNetConfig)
    encoder_channels: tuple[int, ...] = (32, 32, 64, 64)  # stride-2 each
    decoder_channels: tuple[int, ...] = (32, 32, 32, 32)
    loss: LossParams = field(default_factory=LossParams)

    def validate(self) -> None:
        if self.num_slots < 2:
            raise ConfigurationError("num_slots must be >= 2")
        if self.latent_size < 1:
            raise ConfigurationError("latent_size must be >= 1")
        self.unet.validate()
        self.loss.validate()


@dataclass
class MonetLoss:
    total: torch.Tensor
    nll_term: torch.Tensor
    kl_term: torch.Tensor       # beta-weighted
    mask_kl_term: torch.Tensor  # gamma-weighted

    @property
    def breakdown(self) -> dict[str, float]:
        return {
            "nll": float(self.nll_term.detach()),
            "beta_kl": float(self.kl_term.detach()),
            "gamma_mask_kl": float(self.mask_kl_term.detach()),
            "total": float(self.total.detach()),
        }


class ComponentEncoder(nn.Module):
    """Image + log-mask in, posterior parameters out."""

    def __init__(self, config: MonetConfig):
        super().__init__()
        h, w = config.resolution
        layers: list[nn.Module] = []
        cin = 4
        for c in config.encoder_channels:
            layers += [nn.Conv2d(cin, c, 3, stride=2, padding=1), nn.LeakyReLU(0.01)]
            cin = c
        self.convs = nn.Sequential(*layers)
        down = 2 ** len(config.encoder_channels)
        if h % down or w % down:
            raise ConfigurationError(f"resolution {config.resolution} not divisible by {down}")
        flat = cin * (h // down) * (w // down)
        self.mlp = nn.Sequential(
            nn.Linear(flat, config.latent_mlp_size),
            nn.LeakyReLU(0.01),
            nn.Linear(config.latent_mlp_size, 2 * config.latent_size),
        )
        self.latent_size = config.latent_size

    def forward(self, image: torch.Tensor, log_mask: torch.Tensor
                ) -> tuple[torch.Tensor, torch.Tensor]:
        x = torch.cat([image, log_mask], dim=1)
        h = self.convs(x).flatten(1)
        stats = self.mlp(h)
        mean, logvar = stats.chunk(2, dim=1)
        return mean, logvar.clamp(*LOGVAR_RANGE)


class ComponentDecoder(nn.Module):
    """Spatial-broadcast decoder emitting 3 appearance channels and one mask
    logit channel."""

    def __init__(self, config: MonetConfig):
        super().__init__()
        self.resolution = config.resolution
        layers: list[nn.Module] = []
        cin = config.latent_size + 2
        for c in config.decoder_channels:
            layers += [nn.Conv2d(cin, c, 3, padding=1), nn.LeakyReLU(0.01)]
            cin = c
        layers.append(nn.Conv2d(cin, 4, 1))
        self.convs = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h, w = self.resolution
        out = self.convs(spatial_broadcast(z, h, w))
        return torch.sigmoid(out[:, :3]), out[:, 3]


class Monet(nn.Module):
    def __init__(self, config: MonetConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.attention = UNet(config.unet)
        self.encoder = ComponentEncoder(config)
        self.decoder = ComponentDecoder(config)

    def attention_decompose(self, image: torch.Tensor,
                            num_slots: int | None = None) -> torch.Tensor:
        """Stick-breaking recursion in log space; returns (B, K, H, W) log
        masks whose exponentials sum to one per pixel."""
        k = num_slots if num_slots is not None else self.config.num_slots
        if k < 2:
            raise ConfigurationError("stick-breaking needs at least 2 slots")
        b, _, h, w = image.shape
        log_scope = image.new_zeros(b, 1, h, w)
        log_masks = []
        for _ in range(k - 1):
            logits = self.attention(torch.cat([image, log_scope], dim=1))
            log_masks.append(log_scope + F.logsigmoid(logits))
            log_scope = log_scope + F.logsigmoid(-logits)
        log_masks.append(log_scope)
        return torch.cat(log_masks, dim=1)

    def component_vae_forward(self, image: torch.Tensor, log_mask: torch.Tensor
                              ) -> tuple[torch.Tensor, ...]:
        """One slot through the shared VAE: returns (z, mean, logvar,
        appearance, mask_logit)."""
        mean, logvar = self.encoder(image, log_mask)
        if self.training:
            z = mean + torch.exp(0.5 * logvar) * torch.randn_like(mean)
        else:
            z = mean
        appearance, mask_logit = self.decoder(z)
        return z, mean, logvar, appearance, mask_logit

    def forward(self, image: torch.Tensor) -> SlotDecomposition:
        b, _, h, w = image.shape
        k = self.config.num_slots
        log_masks = self.attention_decompose(image)

        flat_image = image.repeat_interleave(k, dim=0)
        flat_logm = log_masks.reshape(b * k, 1, h, w)
        z, mean, logvar, appearance, mask_logit = self.component_vae_forward(
            flat_image, flat_logm)
        for name, t in (("latent", z), ("appearance", appearance),
                        ("mask_logit", mask_logit)):
            if not torch.isfinite(t).all():
                bad = torch.nonzero(~torch.isfinite(t.reshape(b * k, -1)).all(dim=1))
                slot = int(bad[0]) % k if len(bad) else -1
                raise NumericalError(f"non-finite {name} in component VAE at slot {slot}")

        masks = log_masks.exp()
        appearance = appearance.reshape(b, k, 3, h, w)
        mask_logits = mask_logit.reshape(b, k, h, w)
        reconstruction = (masks.unsqueeze(2) * appearance).sum(dim=1)
        return SlotDecomposition(
            masks=masks,
            appearance=appearance,
            latents=z.reshape(b, k, -1),
            reconstruction=reconstruction,
            log_masks=log_masks,
            mask_logits=mask_logits,
            vae_masks=F.softmax(mask_logits, dim=1),
            posterior_mean=mean.reshape(b, k, -1),
            posterior_logvar=logvar.reshape(b, k, -1),
        )


def monet_loss(decomp: SlotDecomposition, image: torch.Tensor,
               params: LossParams) -> MonetLoss:
    """Mixture NLL + beta-weighted latent KL + gamma-weighted mask KL.

    Slot 0 is the background slot and uses sigma_bg; the decoder mixture is
    evaluated per pixel over the slots and summed over pixels.  The mask KL
    compares the attention masks with the softmax over the VAE mask logits,
    averaged over pixels.
    """
    params.validate()
    b, k, h, w = decomp.masks.shape
    sigmas = image.new_full((k,), params.sigma_fg)
    sigmas[0] = params.sigma_bg
    sig = sigmas.view(1, k, 1, 1, 1)

    x = image.unsqueeze(1)
    log_normal = (-0.5 * ((x - decomp.appearance) / sig) ** 2
                  - torch.log(sig) - 0.5 * math.log(2 * math.pi)).sum(dim=2)
    log_mix = torch.logsumexp(decomp.log_masks + log_normal, dim=1)
    nll = -log_mix.sum(dim=(1, 2)).mean()

    mean, logvar = decomp.posterior_mean, decomp.posterior_logvar
    if mean is not None:
        kl = 0.5 * (mean.pow(2) + logvar.exp() - 1.0 - logvar).sum(dim=(1, 2)).mean()
    else:
        kl = image.new_zeros(())

    log_vae = F.log_softmax(decomp.mask_logits, dim=1)
    if params.mask_kl_direction == "attention_to_vae":
        per_pixel = (decomp.masks * (decomp.log_masks - log_vae)).sum(dim=1)
    else:
        vae = log_vae.exp()
        per_pixel = (vae * (log_vae - decomp.log_masks)).sum(dim=1)
    mask_kl = per_pixel.mean(dim=(1, 2)).mean()

    nll_term = nll
    kl_term = params.beta * kl
    mask_kl_term = params.gamma * mask_kl
    for name, t in (("nll", nll_term), ("beta_kl", kl_term),
                    ("gamma_mask_kl", mask_kl_term)):
        if not torch.isfinite(t):
            raise NumericalError(f"non-finite loss term {name}")
    return MonetLoss(
        total=nll_term + kl_term + mask_kl_term,
        nll_term=nll_term,
        kl_term=kl_term,
        mask_kl_term=mask_kl_term,
    )
