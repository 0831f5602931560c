"""Dataset generation and the canonical container format."""

from __future__ import annotations

from pathlib import Path

from .types import (
    ObjectRecord,
    SceneSpec,
    RenderedSample,
    DatasetManifest,
    SHAPES,
    SPLITS,
    default_feature_schema,
)
from .generator import (
    GeneratorConfig,
    sample_scene,
    render_scene,
    render_indexed,
    sample_rng,
    feature_schema_for,
)
from .container import (
    DatasetReader,
    read_dataset,
    write_dataset,
    write_sample,
    write_manifest,
    load_manifest,
    encode_image,
    decode_image,
)


def generate_dataset(config: GeneratorConfig, splits: dict[str, int],
                     root: str | Path, seed: int, name: str = "sprites") -> DatasetManifest:
    """Generate a full dataset; each sample is a pure function of (seed, index)."""
    config.validate()
    if any(n < 0 for n in splits.values()):
        from ..errors import ConfigurationError

        raise ConfigurationError(f"split sizes must be non-negative, got {splits}")
    manifest = DatasetManifest(
        name=name,
        splits={s: int(splits.get(s, 0)) for s in SPLITS},
        height=config.resolution[0],
        width=config.resolution[1],
        feature_schema=feature_schema_for(config),
        style=None,
        extra={"seed": seed, "generator": {
            "max_objects": config.max_objects,
            "min_objects": config.min_objects,
            "scale_range": list(config.scale_range),
            "background_gray_range": list(config.background_gray_range),
        }},
    )

    def stream():
        index = 0
        for split in SPLITS:
            for _ in range(manifest.splits[split]):
                yield render_indexed(seed, index, config)
                index += 1

    write_dataset(stream(), manifest, root)
    return manifest


__all__ = [
    "ObjectRecord", "SceneSpec", "RenderedSample", "DatasetManifest",
    "SHAPES", "SPLITS", "default_feature_schema",
    "GeneratorConfig", "sample_scene", "render_scene", "render_indexed",
    "sample_rng", "feature_schema_for",
    "DatasetReader", "read_dataset", "write_dataset", "write_sample",
    "write_manifest", "load_manifest", "encode_image", "decode_image",
    "generate_dataset",
]
