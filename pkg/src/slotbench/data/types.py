"""Ground-truth scene records and the dataset manifest."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any, Optional

import numpy as np

SHAPES = ("square", "ellipse", "heart")

SPLITS = ("train", "val", "test")


@dataclass
class ObjectRecord:
    """Ground-truth factors of a single sprite.

    ``visibility`` is the fraction of the object's unoccluded pixels that
    survive occlusion; it is filled in during rendering, never sampled.
    """

    shape: str
    color: tuple[float, float, float]
    x: float
    y: float
    scale: float
    orientation: float
    z_order: int
    visibility: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["color"] = list(self.color)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ObjectRecord":
        return cls(
            shape=d["shape"],
            color=tuple(d["color"]),
            x=d["x"],
            y=d["y"],
            scale=d["scale"],
            orientation=d["orientation"],
            z_order=int(d["z_order"]),
            visibility=d["visibility"],
        )


@dataclass
class SceneSpec:
    """An ordered stack of objects over a grayscale background.

    List order is the stacking order: later objects occlude earlier ones.
    """

    objects: list[ObjectRecord]
    background_gray: float

    @property
    def num_objects(self) -> int:
        return len(self.objects)

    def to_dict(self) -> dict[str, Any]:
        return {
            "background_gray": self.background_gray,
            "objects": [o.to_dict() for o in self.objects],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SceneSpec":
        return cls(
            objects=[ObjectRecord.from_dict(o) for o in d["objects"]],
            background_gray=d["background_gray"],
        )


@dataclass
class RenderedSample:
    """Image plus hard per-pixel labels plus post-render metadata.

    ``image`` is H*W*3 float in [0, 1], quantized to the 8-bit grid so that
    PNG round-trips are bit-identical.  ``label_map`` is H*W int; 0 is
    background and k >= 1 is the k-th object of ``metadata.objects``.
    """

    image: np.ndarray
    label_map: np.ndarray
    metadata: SceneSpec


# Feature schema entries are either {"kind": "categorical", "classes": [...]}
# or {"kind": "numeric", "range": [lo, hi]}.
def default_feature_schema(scale_range: tuple[float, float] = (0.1, 0.5)) -> dict[str, Any]:
    return {
        "shape": {"kind": "categorical", "classes": list(SHAPES)},
        "color": {"kind": "numeric", "range": [0.0, 1.0], "dims": 3},
        "x": {"kind": "numeric", "range": [0.0, 1.0]},
        "y": {"kind": "numeric", "range": [0.0, 1.0]},
        "scale": {"kind": "numeric", "range": [float(scale_range[0]), float(scale_range[1])]},
        "orientation": {"kind": "numeric", "range": [0.0, float(2 * np.pi)]},
    }


@dataclass
class DatasetManifest:
    """Self-describing header stored as ``manifest.json`` at the dataset root."""

    name: str
    splits: dict[str, int]
    height: int
    width: int
    feature_schema: dict[str, Any]
    style: Optional[dict[str, Any]] = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "splits": dict(self.splits),
            "height": self.height,
            "width": self.width,
            "feature_schema": self.feature_schema,
            "style": self.style,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetManifest":
        return cls(
            name=d["name"],
            splits={k: int(v) for k, v in d["splits"].items()},
            height=int(d["height"]),
            width=int(d["width"]),
            feature_schema=d["feature_schema"],
            style=d.get("style"),
            extra=d.get("extra", {}),
        )
