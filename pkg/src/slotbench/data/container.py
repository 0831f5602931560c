"""On-disk dataset container: PNG images/labels plus JSONL metadata.

Layout::

    <root>/manifest.json
    <root>/<split>/images/%06d.png    8-bit RGB
    <root>/<split>/labels/%06d.png    8-bit single channel, pixel value = label
    <root>/<split>/metadata.jsonl     one JSON object per sample
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from PIL import Image

from ..errors import FormatError, StorageError
from .types import DatasetManifest, RenderedSample, SceneSpec, SPLITS


def encode_image(image: np.ndarray) -> np.ndarray:
    return np.round(image.astype(np.float64) * 255.0).astype(np.uint8)


def decode_image(raw: np.ndarray) -> np.ndarray:
    return (raw.astype(np.float64) / 255.0).astype(np.float32)


def _image_path(root: Path, split: str, index: int) -> Path:
    return root / split / "images" / f"{index:06d}.png"


def _label_path(root: Path, split: str, index: int) -> Path:
    return root / split / "labels" / f"{index:06d}.png"


def save_png(path: Path, array: np.ndarray, mode: str) -> None:
    """Write a PNG atomically (tmp + rename) so partial writes never
    masquerade as finished samples."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.png")
    try:
        Image.fromarray(array, mode=mode).save(tmp, format="PNG")
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"failed to write {path}: {exc}") from exc


def write_sample(root: Path, split: str, index: int, sample: RenderedSample) -> None:
    if sample.label_map.max(initial=0) > 255:
        raise FormatError("label map exceeds 8-bit label range")
    save_png(_image_path(root, split, index), encode_image(sample.image), "RGB")
    save_png(_label_path(root, split, index), sample.label_map.astype(np.uint8), "L")


def write_manifest(root: Path, manifest: DatasetManifest) -> None:
    root.mkdir(parents=True, exist_ok=True)
    try:
        (root / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2))
    except OSError as exc:
        raise StorageError(f"failed to write {root / 'manifest.json'}: {exc}") from exc


def write_dataset(samples: Iterable[RenderedSample], manifest: DatasetManifest,
                  root: str | Path) -> None:
    """Consume the sample stream into splits, in declared split order.

    The stream must yield exactly ``sum(manifest.splits.values())`` samples;
    the first ``splits['train']`` go to train, and so on.
    """
    root = Path(root)
    write_manifest(root, manifest)
    it = iter(samples)
    for split in SPLITS:
        n = manifest.splits.get(split, 0)
        metadata_lines = []
        for i in range(n):
            try:
                sample = next(it)
            except StopIteration:
                raise FormatError(
                    f"sample stream exhausted before filling split {split!r}"
                ) from None
            write_sample(root, split, i, sample)
            metadata_lines.append(json.dumps(sample.metadata.to_dict()))
        if n > 0:
            meta_path = root / split / "metadata.jsonl"
            meta_path.parent.mkdir(parents=True, exist_ok=True)
            meta_path.write_text("\n".join(metadata_lines) + "\n")


def load_manifest(root: str | Path) -> DatasetManifest:
    path = Path(root) / "manifest.json"
    if not path.is_file():
        raise FormatError(f"no dataset manifest at {path}")
    try:
        return DatasetManifest.from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"corrupt manifest {path}: {exc}") from exc


class DatasetReader:
    """Random access over one split.  Stateless per access, so instances are
    safe to share across concurrent consumers."""

    def __init__(self, root: str | Path, split: str):
        self.root = Path(root)
        self.split = split
        self.manifest = load_manifest(self.root)
        if split not in self.manifest.splits:
            raise FormatError(f"split {split!r} not declared in {self.root / 'manifest.json'}")
        self._length = self.manifest.splits[split]
        meta_path = self.root / split / "metadata.jsonl"
        if not meta_path.is_file():
            raise FormatError(f"missing metadata file {meta_path}")
        lines = meta_path.read_text().splitlines()
        if len(lines) != self._length:
            raise FormatError(
                f"{meta_path} has {len(lines)} records, manifest declares {self._length}"
            )
        try:
            self._metadata = [SceneSpec.from_dict(json.loads(line)) for line in lines]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"corrupt metadata {meta_path}: {exc}") from exc

    def __len__(self) -> int:
        return self._length

    def _load_png(self, path: Path) -> np.ndarray:
        if not path.is_file():
            raise FormatError(f"missing file {path}")
        with Image.open(path) as img:
            return np.asarray(img)

    def __getitem__(self, index: int) -> RenderedSample:
        if not 0 <= index < self._length:
            raise IndexError(index)
        image = decode_image(self._load_png(_image_path(self.root, self.split, index)))
        labels = self._load_png(_label_path(self.root, self.split, index)).astype(np.int32)
        if image.shape[:2] != (self.manifest.height, self.manifest.width):
            raise FormatError(
                f"image {index} has shape {image.shape[:2]}, manifest declares "
                f"{(self.manifest.height, self.manifest.width)}"
            )
        return RenderedSample(image=image, label_map=labels, metadata=self._metadata[index])

    def __iter__(self) -> Iterator[RenderedSample]:
        for i in range(self._length):
            yield self[i]


def read_dataset(root: str | Path, split: str) -> DatasetReader:
    return DatasetReader(root, split)
