"""Procedural multi-sprite scene sampling and rasterization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .types import ObjectRecord, SceneSpec, RenderedSample, SHAPES, default_feature_schema

# Bounding box of the implicit heart curve (x^2+y^2-1)^3 - x^2*y^3 <= 0,
# measured on a fine grid; used to scale the curve to the sprite box.
_HEART_XMAX = 1.139
_HEART_YMIN = -1.0
_HEART_YMAX = 1.2365

_SUPERSAMPLE = 4  # subpixel grid per axis for anti-aliased appearance


@dataclass
class GeneratorConfig:
    """Ranges for uniform factor sampling plus the dataset geometry."""

    max_objects: int = 6
    min_objects: int = 1
    resolution: tuple[int, int] = (64, 64)
    scale_range: tuple[float, float] = (0.1, 0.5)
    background_gray_range: tuple[float, float] = (0.0, 1.0)

    def validate(self) -> None:
        if self.min_objects < 1 or self.max_objects < self.min_objects:
            raise ConfigurationError(
                f"object count range [{self.min_objects}, {self.max_objects}] is invalid"
            )
        lo, hi = self.scale_range
        if not (0.1 <= lo <= hi <= 0.5):
            raise ConfigurationError(f"scale_range {self.scale_range} outside [0.1, 0.5]")
        h, w = self.resolution
        if h < 16 or w < 16:
            raise ConfigurationError(f"resolution {self.resolution} below 16x16 minimum")
        glo, ghi = self.background_gray_range
        if not (0.0 <= glo <= ghi <= 1.0):
            raise ConfigurationError(
                f"background_gray_range {self.background_gray_range} outside [0, 1]"
            )


def sample_scene(rng: np.random.Generator, config: GeneratorConfig) -> SceneSpec:
    """Draw one scene with all factors independent and uniform.

    The number of objects is uniform on [min_objects, max_objects]; list
    position doubles as the stacking rank.
    """
    config.validate()
    n = int(rng.integers(config.min_objects, config.max_objects + 1))
    objects = []
    for k in range(n):
        objects.append(
            ObjectRecord(
                shape=SHAPES[int(rng.integers(len(SHAPES)))],
                color=tuple(float(c) for c in rng.uniform(0.0, 1.0, size=3)),
                x=float(rng.uniform(0.0, 1.0)),
                y=float(rng.uniform(0.0, 1.0)),
                scale=float(rng.uniform(*config.scale_range)),
                orientation=float(rng.uniform(0.0, 2.0 * np.pi)),
                z_order=k,
            )
        )
    gray = float(rng.uniform(*config.background_gray_range))
    return SceneSpec(objects=objects, background_gray=gray)


def _inside(shape: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Membership test in object-local coordinates (box is [-0.5, 0.5]^2,
    v pointing down as in image space)."""
    if shape == "square":
        return (np.abs(u) <= 0.5) & (np.abs(v) <= 0.5)
    if shape == "ellipse":
        return u * u + v * v <= 0.25
    if shape == "heart":
        hx = u * (2.0 * _HEART_XMAX)
        # flip v so the lobes sit at the top of the box at orientation 0
        hy = _HEART_YMAX - (v + 0.5) * (_HEART_YMAX - _HEART_YMIN)
        return (hx * hx + hy * hy - 1.0) ** 3 - hx * hx * hy ** 3 <= 0.0
    raise ConfigurationError(f"unknown shape {shape!r}")


def _local_coords(obj: ObjectRecord, px: np.ndarray, py: np.ndarray,
                  height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    size = obj.scale * min(height, width)
    u = (px - obj.x * width) / size
    v = (py - obj.y * height) / size
    c, s = np.cos(obj.orientation), np.sin(obj.orientation)
    return u * c + v * s, -u * s + v * c


def render_scene(spec: SceneSpec, resolution: tuple[int, int]) -> RenderedSample:
    """Rasterize back-to-front, with hard labels and anti-aliased appearance.

    Labels come from a pixel-center coverage test so the label map is a hard
    partition; appearance alpha is supersampled.  Visibility of every object
    is recomputed as visible pixels / unoccluded pixels.
    """
    height, width = resolution
    if height < 16 or width < 16:
        raise ConfigurationError(f"resolution {resolution} below 16x16 minimum")

    ys, xs = np.meshgrid(np.arange(height) + 0.5, np.arange(width) + 0.5, indexing="ij")

    offsets = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE
    sub_dy, sub_dx = np.meshgrid(offsets, offsets, indexing="ij")
    sub_dy = sub_dy.reshape(-1, 1, 1) - 0.5
    sub_dx = sub_dx.reshape(-1, 1, 1) - 0.5

    label_map = np.zeros((height, width), dtype=np.int32)
    image = np.full((height, width, 3), spec.background_gray, dtype=np.float64)
    unoccluded = []

    for k, obj in enumerate(spec.objects, start=1):
        u, v = _local_coords(obj, xs, ys, height, width)
        hard = _inside(obj.shape, u, v)
        label_map[hard] = k
        unoccluded.append(int(hard.sum()))

        su, sv = _local_coords(obj, xs[None] + sub_dx, ys[None] + sub_dy, height, width)
        alpha = _inside(obj.shape, su, sv).mean(axis=0)
        color = np.asarray(obj.color, dtype=np.float64)
        image = image * (1.0 - alpha[..., None]) + color * alpha[..., None]

    objects = []
    for k, obj in enumerate(spec.objects, start=1):
        visible = int((label_map == k).sum())
        vis = visible / unoccluded[k - 1] if unoccluded[k - 1] > 0 else 0.0
        objects.append(
            ObjectRecord(
                shape=obj.shape, color=obj.color, x=obj.x, y=obj.y,
                scale=obj.scale, orientation=obj.orientation,
                z_order=obj.z_order, visibility=vis,
            )
        )

    # quantize to the 8-bit grid so container round-trips are bit-identical
    image = (np.round(image * 255.0) / 255.0).astype(np.float32)
    meta = SceneSpec(objects=objects, background_gray=spec.background_gray)
    return RenderedSample(image=image, label_map=label_map, metadata=meta)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one sample; generation is a pure function of
    (seed, index) so parallel workers can share nothing."""
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def render_indexed(seed: int, index: int, config: GeneratorConfig) -> RenderedSample:
    return render_scene(sample_scene(sample_rng(seed, index), config), config.resolution)


def feature_schema_for(config: GeneratorConfig) -> dict:
    return default_feature_schema(config.scale_range)
