import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slotbench.data import (
    GeneratorConfig,
    ObjectRecord,
    SceneSpec,
    generate_dataset,
    read_dataset,
    render_scene,
    sample_rng,
    sample_scene,
    write_dataset,
)
from slotbench.data.types import DatasetManifest, default_feature_schema
from slotbench.errors import ConfigurationError, FormatError


def make_manifest(splits, h=16, w=16, name="t"):
    return DatasetManifest(name=name, splits=splits, height=h, width=w,
                           feature_schema=default_feature_schema())


def test_sample_scene_object_count_in_range():
    cfg = GeneratorConfig(max_objects=6)
    spec = sample_scene(sample_rng(0, 0), cfg)
    assert 1 <= spec.num_objects <= 6


def test_sample_scene_single_object_cap():
    cfg = GeneratorConfig(max_objects=1)
    spec = sample_scene(sample_rng(3, 0), cfg)
    assert spec.num_objects == 1


def test_sample_scene_deterministic():
    cfg = GeneratorConfig()
    a = sample_scene(sample_rng(7, 5), cfg)
    b = sample_scene(sample_rng(7, 5), cfg)
    assert a == b


def test_sample_scene_factor_ranges():
    cfg = GeneratorConfig(scale_range=(0.1, 0.5))
    for i in range(20):
        spec = sample_scene(sample_rng(11, i), cfg)
        for o in spec.objects:
            assert 0.0 <= o.x <= 1.0 and 0.0 <= o.y <= 1.0
            assert 0.1 <= o.scale <= 0.5
            assert 0.0 <= o.orientation < 2 * np.pi
            assert all(0.0 <= c <= 1.0 for c in o.color)


def test_invalid_config_raises():
    with pytest.raises(ConfigurationError):
        GeneratorConfig(max_objects=0).validate()
    with pytest.raises(ConfigurationError):
        GeneratorConfig(scale_range=(0.05, 0.5)).validate()
    with pytest.raises(ConfigurationError):
        GeneratorConfig(resolution=(8, 64)).validate()


def test_render_single_centered_square():
    spec = SceneSpec(
        objects=[ObjectRecord("square", (1.0, 0.0, 0.0), 0.5, 0.5, 0.5, 0.0, 0)],
        background_gray=0.2,
    )
    s = render_scene(spec, (64, 64))
    assert set(np.unique(s.label_map)) == {0, 1}
    fg = s.label_map == 1
    # one connected axis-aligned block: bounding box of the region is filled
    ys, xs = np.nonzero(fg)
    assert fg[ys.min():ys.max() + 1, xs.min():xs.max() + 1].all()
    assert s.metadata.objects[0].visibility == 1.0


def test_render_occlusion_order():
    top = ObjectRecord("square", (0, 1, 0), 0.5, 0.5, 0.3, 0.0, 1)
    bottom = ObjectRecord("square", (1, 0, 0), 0.45, 0.45, 0.3, 0.0, 0)
    s = render_scene(SceneSpec(objects=[bottom, top], background_gray=0.0), (64, 64))
    assert s.metadata.objects[0].visibility < 1.0
    assert s.metadata.objects[1].visibility == 1.0


def test_render_fully_occluded_gets_zero_visibility():
    hidden = ObjectRecord("ellipse", (0, 0, 1), 0.5, 0.5, 0.1, 0.0, 0)
    cover = ObjectRecord("square", (1, 1, 1), 0.5, 0.5, 0.5, 0.0, 1)
    s = render_scene(SceneSpec(objects=[hidden, cover], background_gray=0.0), (64, 64))
    assert s.metadata.objects[0].visibility == 0.0
    assert not (s.label_map == 1).any()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), index=st.integers(0, 50))
def test_partition_and_visibility_invariants(seed, index):
    cfg = GeneratorConfig(resolution=(32, 32))
    spec = sample_scene(sample_rng(seed, index), cfg)
    s = render_scene(spec, cfg.resolution)
    # partition: every pixel carries exactly one label
    counts = np.bincount(s.label_map.ravel(), minlength=spec.num_objects + 1)
    assert counts.sum() == 32 * 32
    assert s.label_map.min() >= 0 and s.label_map.max() <= spec.num_objects
    # visibility * unoccluded == visible, exactly as integers
    for k, obj in enumerate(s.metadata.objects, start=1):
        ys, xs = np.meshgrid(np.arange(32) + 0.5, np.arange(32) + 0.5, indexing="ij")
        from slotbench.data.generator import _inside, _local_coords

        u, v = _local_coords(obj, xs, ys, 32, 32)
        unoccluded = int(_inside(obj.shape, u, v).sum())
        visible = int((s.label_map == k).sum())
        if unoccluded == 0:
            assert obj.visibility == 0.0
        else:
            assert int(round(obj.visibility * unoccluded)) == visible
        if obj.visibility > 0:
            assert visible >= 1


def test_render_deterministic_bytes():
    cfg = GeneratorConfig()
    a = render_scene(sample_scene(sample_rng(1, 2), cfg), (64, 64))
    b = render_scene(sample_scene(sample_rng(1, 2), cfg), (64, 64))
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.label_map, b.label_map)


def test_heart_renders_nonconvex():
    spec = SceneSpec(
        objects=[ObjectRecord("heart", (1, 0, 0), 0.5, 0.5, 0.5, 0.0, 0)],
        background_gray=0.0,
    )
    s = render_scene(spec, (64, 64))
    fg = s.label_map == 1
    assert fg.sum() > 100
    # the notch between the lobes: top-center pixel column has background
    ys, xs = np.nonzero(fg)
    top_row = ys.min()
    assert not fg[top_row, 31] or not fg[top_row, 32] or fg[top_row].sum() < (
        fg[(ys.min() + ys.max()) // 2].sum()
    )


def round_trip(tmp_path, n_train=2, n_val=1, n_test=1, resolution=(16, 16)):
    cfg = GeneratorConfig(resolution=resolution)
    manifest = generate_dataset(cfg, {"train": n_train, "val": n_val, "test": n_test},
                                tmp_path, seed=0)
    return cfg, manifest


def test_write_read_round_trip(tmp_path):
    cfg, _ = round_trip(tmp_path, n_train=10, n_val=0, n_test=0)
    reader = read_dataset(tmp_path, "train")
    assert len(reader) == 10
    for i in range(10):
        expected = render_scene(sample_scene(sample_rng(0, i), cfg), cfg.resolution)
        got = reader[i]
        assert np.array_equal(got.image, expected.image)
        assert np.array_equal(got.label_map, expected.label_map)
        assert got.metadata == expected.metadata


def test_split_sizes_on_disk(tmp_path):
    round_trip(tmp_path, 2, 1, 1)
    assert len(list((tmp_path / "train" / "images").glob("*.png"))) == 2
    assert len(list((tmp_path / "val" / "images").glob("*.png"))) == 1
    assert len(list((tmp_path / "test" / "images").glob("*.png"))) == 1
    assert len(read_dataset(tmp_path, "val")) == 1


def test_read_is_repeatable(tmp_path):
    round_trip(tmp_path)
    reader = read_dataset(tmp_path, "train")
    a, b = reader[0], reader[0]
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.label_map, b.label_map)


def test_corrupt_manifest_raises_format_error(tmp_path):
    round_trip(tmp_path)
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(FormatError, match="manifest"):
        read_dataset(tmp_path, "train")


def test_missing_root_raises_format_error(tmp_path):
    with pytest.raises(FormatError):
        read_dataset(tmp_path / "nope", "train")


def test_metadata_mismatch_raises(tmp_path):
    round_trip(tmp_path)
    meta = tmp_path / "train" / "metadata.jsonl"
    meta.write_text(meta.read_text() + json.dumps({"background_gray": 0, "objects": []}) + "\n")
    with pytest.raises(FormatError, match="metadata"):
        read_dataset(tmp_path, "train")


def test_generation_is_byte_identical_across_runs(tmp_path):
    cfg = GeneratorConfig(resolution=(16, 16))
    generate_dataset(cfg, {"train": 3, "val": 0, "test": 0}, tmp_path / "a", seed=9)
    generate_dataset(cfg, {"train": 3, "val": 0, "test": 0}, tmp_path / "b", seed=9)
    for rel in ["manifest.json", "train/images/000001.png", "train/labels/000002.png",
                "train/metadata.jsonl"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_stream_exhaustion_raises(tmp_path):
    manifest = make_manifest({"train": 2, "val": 0, "test": 0})
    cfg = GeneratorConfig(resolution=(16, 16))
    one = [render_scene(sample_scene(sample_rng(0, 0), cfg), (16, 16))]
    with pytest.raises(FormatError, match="exhausted"):
        write_dataset(iter(one), manifest, tmp_path)
