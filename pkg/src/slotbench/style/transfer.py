"""Whole-image pixel-space style transfer and mask-preserving recompositing."""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import torch

from ..data.container import (
    DatasetReader,
    encode_image,
    decode_image,
    load_manifest,
    save_png,
    write_manifest,
)
from ..data.types import RenderedSample, SPLITS
from ..errors import ConfigurationError, OptimizationError
from .extractor import FeatureExtractor

_MAX_HALVINGS = 10


@dataclass
class StyleConfig:
    style_image: np.ndarray = None  # H*W*3 in [0, 1]
    content_weight: float = 1.0
    style_weight: float = 1e4
    iterations: int = 300
    content_layers: tuple[str, ...] = ("conv3",)
    style_layers: tuple[str, ...] = ("conv1", "conv2", "conv3", "conv4", "conv5")
    step_size: float = 1.0

    def validate(self) -> None:
        if self.style_image is None:
            raise ConfigurationError("style_image is required")
        if self.content_weight < 0 or self.style_weight < 0:
            raise ConfigurationError("loss weights must be non-negative")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if not self.style_layers:
            raise ConfigurationError("at least one style layer is required")
        if self.step_size <= 0:
            raise ConfigurationError("step_size must be positive")


def gram_matrix(features: torch.Tensor) -> torch.Tensor:
    """Channel correlation matrix F @ F.T / (C*H*W) of a (C, H, W) map."""
    c, h, w = features.shape
    flat = features.reshape(c, h * w)
    return flat @ flat.t() / (c * h * w)


def _to_tensor(image: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(image)).float().permute(2, 0, 1).unsqueeze(0)


def _to_image(tensor: torch.Tensor) -> np.ndarray:
    return tensor.squeeze(0).permute(1, 2, 0).numpy().astype(np.float32)


class _Objective:
    """Total loss and its two components against fixed targets."""

    def __init__(self, content: torch.Tensor, config: StyleConfig,
                 extractor: FeatureExtractor):
        self.config = config
        self.extractor = extractor
        known = set(extractor.layer_names)
        unknown = (set(config.content_layers) | set(config.style_layers)) - known
        if unknown:
            raise ConfigurationError(
                f"unknown extractor layers {sorted(unknown)}; available: {sorted(known)}"
            )
        with torch.no_grad():
            self.content_targets = {
                k: v.detach() for k, v in extractor(content).items()
                if k in config.content_layers
            }
            style_feats = extractor(_to_tensor(config.style_image))
            self.style_targets = {
                k: gram_matrix(style_feats[k][0]).detach() for k in config.style_layers
            }

    def __call__(self, x: torch.Tensor) -> tuple[torch.Tensor, float, float]:
        feats = self.extractor(x)
        content_term = x.new_zeros(())
        for name, target in self.content_targets.items():
            content_term = content_term + torch.nn.functional.mse_loss(feats[name], target)
        style_term = x.new_zeros(())
        for name, target in self.style_targets.items():
            style_term = style_term + torch.nn.functional.mse_loss(
                gram_matrix(feats[name][0]), target)
        total = self.config.content_weight * content_term \
            + self.config.style_weight * style_term
        return total, float(content_term.detach()), float(style_term.detach())


def evaluate_losses(image: np.ndarray, content: np.ndarray, config: StyleConfig,
                    extractor: FeatureExtractor) -> tuple[float, float, float]:
    """(total, content term, style term) of ``image`` against targets built
    from ``content`` and the configured style image."""
    config.validate()
    objective = _Objective(_to_tensor(content), config, extractor)
    with torch.no_grad():
        total, c, s = objective(_to_tensor(image))
    return float(total), c, s


def stylize_image(content: np.ndarray, config: StyleConfig,
                  extractor: FeatureExtractor) -> tuple[np.ndarray, list[float]]:
    """Gradient descent on pixels with a halving safeguard: a candidate step
    is accepted only if the loss does not increase, so the returned trace is
    monotone non-increasing.  Returns (image, trace); trace[0] is the loss at
    initialization (= the content image)."""
    config.validate()
    content_t = _to_tensor(content)
    objective = _Objective(content_t, config, extractor)

    x = content_t.clone()
    lr = config.step_size
    with torch.no_grad():
        current, _, _ = objective(x)
    current = float(current)
    if not np.isfinite(current):
        raise OptimizationError("non-finite loss at iteration 0")
    trace = [current]

    for it in range(config.iterations):
        x.requires_grad_(True)
        total, _, _ = objective(x)
        if not torch.isfinite(total):
            raise OptimizationError(f"non-finite loss at iteration {it}")
        grad = torch.autograd.grad(total, x)[0]
        x = x.detach()

        accepted = False
        with torch.no_grad():
            for halving in range(_MAX_HALVINGS + 1):
                candidate = (x - lr * grad).clamp_(0.0, 1.0)
                cand_loss = float(objective(candidate)[0])
                if np.isfinite(cand_loss) and cand_loss <= current:
                    x = candidate
                    current = cand_loss
                    accepted = True
                    if halving == 0:
                        lr = min(lr * 1.1, config.step_size)
                    break
                lr *= 0.5
        if not accepted:
            lr *= 2.0 ** (_MAX_HALVINGS + 1)  # restore; all candidates rejected
        trace.append(current)

    return _to_image(x), trace


def stylize_sample(sample: RenderedSample, config: StyleConfig,
                   extractor: FeatureExtractor) -> RenderedSample:
    """Style the whole image, then keep the styled pixels only where the
    ground-truth labels mark foreground.  Labels and metadata pass through
    untouched."""
    fg = sample.label_map > 0
    if not fg.any():
        return RenderedSample(image=sample.image.copy(),
                              label_map=sample.label_map.copy(),
                              metadata=sample.metadata)
    styled, _ = stylize_image(sample.image, config, extractor)
    styled = decode_image(encode_image(styled))  # quantize to the 8-bit grid
    out = np.where(fg[..., None], styled, sample.image)
    return RenderedSample(image=out.astype(np.float32),
                          label_map=sample.label_map.copy(),
                          metadata=sample.metadata)


def style_metadata(config: StyleConfig, extractor: FeatureExtractor) -> dict:
    digest = hashlib.sha256(
        encode_image(np.asarray(config.style_image)).tobytes()
    ).hexdigest()
    return {
        "style_image_sha256": digest,
        "content_weight": config.content_weight,
        "style_weight": config.style_weight,
        "iterations": config.iterations,
        "content_layers": list(config.content_layers),
        "style_layers": list(config.style_layers),
        "step_size": config.step_size,
        "extractor": {
            "widths": list(extractor.config.widths),
            "seed": extractor.config.seed,
            "weights_path": extractor.config.weights_path,
        },
    }


def stylize_dataset(root_in: str | Path, root_out: str | Path, config: StyleConfig,
                    extractor: FeatureExtractor,
                    on_sample: Optional[Callable[[str, int], None]] = None) -> None:
    """Stylize every sample of a dataset into a new root.

    Each output image is written atomically as soon as it is done, so an
    interrupted run resumes by skipping finished samples.  Label files and
    metadata are byte-for-byte copies of the source.
    """
    config.validate()
    root_in, root_out = Path(root_in), Path(root_out)
    manifest = load_manifest(root_in)
    manifest.style = style_metadata(config, extractor)
    write_manifest(root_out, manifest)

    for split in SPLITS:
        n = manifest.splits.get(split, 0)
        if n == 0:
            continue
        reader = DatasetReader(root_in, split)
        for i in range(n):
            out_img = root_out / split / "images" / f"{i:06d}.png"
            if not out_img.exists():
                stylized = stylize_sample(reader[i], config, extractor)
                save_png(out_img, encode_image(stylized.image), "RGB")
            out_label = root_out / split / "labels" / f"{i:06d}.png"
            if not out_label.exists():
                out_label.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(root_in / split / "labels" / f"{i:06d}.png", out_label)
            if on_sample is not None:
                on_sample(split, i)
        shutil.copyfile(root_in / split / "metadata.jsonl",
                        root_out / split / "metadata.jsonl")
