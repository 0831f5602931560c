"""Slot-based autoencoder models."""

from .common import SlotDecomposition
from .monet import Monet, MonetConfig, MonetLoss, LossParams, monet_loss
from .slot_attention import (
    SlotAttentionAutoencoder,
    SlotAttentionConfig,
    SlotAttentionModule,
    reconstruction_loss,
)

__all__ = [
    "SlotDecomposition",
    "Monet", "MonetConfig", "MonetLoss", "LossParams", "monet_loss",
    "SlotAttentionAutoencoder", "SlotAttentionConfig", "SlotAttentionModule",
    "reconstruction_loss",
]
