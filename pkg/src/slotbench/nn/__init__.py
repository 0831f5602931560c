"""Shared differentiable building blocks."""

from .unet import UNet, UNetConfig
from .broadcast import SpatialBroadcastConfig, spatial_broadcast, coordinate_ramps
from .residual import (
    ResidualStack,
    ResidualStackConfig,
    ReZeroBlock,
    table3_encoder_config,
    table3_decoder_config,
)
from .encoder import ConvEncoder, ConvEncoderConfig, SoftPositionEmbed, position_grid
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "UNet", "UNetConfig",
    "SpatialBroadcastConfig", "spatial_broadcast", "coordinate_ramps",
    "ResidualStack", "ResidualStackConfig", "ReZeroBlock",
    "table3_encoder_config", "table3_decoder_config",
    "ConvEncoder", "ConvEncoderConfig", "SoftPositionEmbed", "position_grid",
    "save_checkpoint", "load_checkpoint",
]
