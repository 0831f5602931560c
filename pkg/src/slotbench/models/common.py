"""Per-slot decomposition emitted by both model families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch


@dataclass
class SlotDecomposition:
    """Everything a forward pass knows about the slots.

    ``masks`` are the mixing weights actually used for the reconstruction
    (stick-breaking attention for MONet, alpha softmax for Slot Attention)
    and sum to one over slots at every pixel.
    """

    masks: torch.Tensor          # (B, K, H, W)
    appearance: torch.Tensor     # (B, K, 3, H, W)
    latents: torch.Tensor        # (B, K, D)
    reconstruction: torch.Tensor  # (B, 3, H, W)
    log_masks: Optional[torch.Tensor] = None        # (B, K, H, W) attention, log space
    mask_logits: Optional[torch.Tensor] = None      # (B, K, H, W) decoder mask/alpha logits
    vae_masks: Optional[torch.Tensor] = None        # (B, K, H, W) softmax of mask_logits
    posterior_mean: Optional[torch.Tensor] = None   # (B, K, D)
    posterior_logvar: Optional[torch.Tensor] = None
    attention: Optional[torch.Tensor] = None        # (B, K, N) over feature locations

    @property
    def num_slots(self) -> int:
        return self.masks.shape[1]

    def representations(self) -> torch.Tensor:
        """Slot vectors used for probing: posterior means when the model is
        variational, otherwise the slot latents themselves."""
        return self.posterior_mean if self.posterior_mean is not None else self.latents
