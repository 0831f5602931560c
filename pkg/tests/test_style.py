import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from slotbench.data import GeneratorConfig, generate_dataset, read_dataset
from slotbench.errors import ConfigurationError
from slotbench.style import (
    FeatureExtractor,
    FeatureExtractorConfig,
    StyleConfig,
    evaluate_losses,
    gram_matrix,
    stylize_dataset,
    stylize_image,
    stylize_sample,
)


def gram_bruteforce(features: np.ndarray) -> np.ndarray:
    """Naive O(C^2 * H * W) double loop over channel pairs."""
    c, h, w = features.shape
    out = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            out[i, j] = float((features[i] * features[j]).sum()) / (c * h * w)
    return out


def checker_style(size=16):
    """Deterministic high-contrast texture for style targets."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = np.zeros((size, size, 3), dtype=np.float32)
    img[..., 0] = ((xx // 2 + yy // 2) % 2).astype(np.float32)
    img[..., 1] = ((xx // 3) % 2).astype(np.float32)
    img[..., 2] = 0.5
    return img


@pytest.fixture(scope="module")
def extractor():
    return FeatureExtractor(FeatureExtractorConfig(seed=0))


class TestGramMatrix:
    def test_zero_features_give_zero_matrix(self):
        g = gram_matrix(torch.zeros(4, 8, 8))
        assert torch.equal(g, torch.zeros(4, 4))

    def test_single_constant_channel(self):
        v = 0.7
        g = gram_matrix(torch.full((1, 3, 5), v))
        assert g.shape == (1, 1)
        assert abs(g.item() - v * v) < 1e-6

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(0)
        feats = rng.normal(size=(3, 4, 4)).astype(np.float32)
        got = gram_matrix(torch.from_numpy(feats)).numpy()
        np.testing.assert_allclose(got, gram_bruteforce(feats), atol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_symmetric_psd(self, seed):
        rng = np.random.default_rng(seed)
        feats = torch.from_numpy(rng.normal(size=(5, 3, 3)).astype(np.float32))
        g = gram_matrix(feats).numpy().astype(np.float64)
        np.testing.assert_allclose(g, g.T, atol=1e-6)
        eigs = np.linalg.eigvalsh(g)
        assert eigs.min() > -1e-6


class TestStylizeImage:
    def test_zero_style_weight_is_identity(self, extractor):
        rng = np.random.default_rng(1)
        content = rng.uniform(size=(16, 16, 3)).astype(np.float32)
        cfg = StyleConfig(style_image=checker_style(), style_weight=0.0, iterations=3)
        out, trace = stylize_image(content, cfg, extractor)
        assert np.array_equal(out, content)
        assert trace[0] == 0.0

    def test_loss_trace_monotone_non_increasing(self, extractor):
        rng = np.random.default_rng(2)
        content = rng.uniform(size=(16, 16, 3)).astype(np.float32)
        cfg = StyleConfig(style_image=checker_style(), iterations=20)
        out, trace = stylize_image(content, cfg, extractor)
        assert len(trace) == 21
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] < trace[0]
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_style_equal_to_content_starts_at_zero_style_loss(self, extractor):
        img = checker_style()
        cfg = StyleConfig(style_image=img)
        total, content_term, style_term = evaluate_losses(img, img, cfg, extractor)
        assert style_term == 0.0 and content_term == 0.0 and total == 0.0

    def test_unknown_layer_rejected(self, extractor):
        cfg = StyleConfig(style_image=checker_style(), style_layers=("conv9",))
        with pytest.raises(ConfigurationError):
            stylize_image(checker_style(), cfg, extractor)

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigurationError):
            StyleConfig(style_image=checker_style(), iterations=0).validate()
        with pytest.raises(ConfigurationError):
            StyleConfig(style_image=checker_style(), style_layers=()).validate()

    def test_deterministic(self, extractor):
        rng = np.random.default_rng(3)
        content = rng.uniform(size=(16, 16, 3)).astype(np.float32)
        cfg = StyleConfig(style_image=checker_style(), iterations=5)
        a, ta = stylize_image(content, cfg, extractor)
        b, tb = stylize_image(content, cfg, extractor)
        assert np.array_equal(a, b) and ta == tb


def tiny_dataset(tmp_path, n_train=4, resolution=(16, 16), seed=0):
    cfg = GeneratorConfig(resolution=resolution, max_objects=2)
    generate_dataset(cfg, {"train": n_train, "val": 0, "test": 0}, tmp_path, seed=seed)
    return cfg


class TestStylizeSample:
    def test_empty_foreground_is_identity(self, extractor):
        from slotbench.data import RenderedSample, SceneSpec

        img = np.zeros((16, 16, 3), dtype=np.float32)
        sample = RenderedSample(image=img, label_map=np.zeros((16, 16), np.int32),
                                metadata=SceneSpec(objects=[], background_gray=0.0))
        cfg = StyleConfig(style_image=checker_style(), iterations=2)
        out = stylize_sample(sample, cfg, extractor)
        assert np.array_equal(out.image, img)

    def test_background_bit_equal_and_foreground_changes(self, tmp_path, extractor):
        tiny_dataset(tmp_path)
        sample = read_dataset(tmp_path, "train")[0]
        assert (sample.label_map > 0).any()
        cfg = StyleConfig(style_image=checker_style(), iterations=10)
        out = stylize_sample(sample, cfg, extractor)
        bg = sample.label_map == 0
        assert np.array_equal(out.image[bg], sample.image[bg])
        assert (out.image[~bg] != sample.image[~bg]).any()
        assert np.array_equal(out.label_map, sample.label_map)
        assert out.metadata == sample.metadata


class TestStylizeDataset:
    def test_labels_and_metadata_byte_identical(self, tmp_path, extractor):
        src, dst = tmp_path / "src", tmp_path / "dst"
        tiny_dataset(src)
        cfg = StyleConfig(style_image=checker_style(), iterations=2)
        stylize_dataset(src, dst, cfg, extractor)
        for i in range(4):
            rel = f"train/labels/{i:06d}.png"
            assert (dst / rel).read_bytes() == (src / rel).read_bytes()
        assert (dst / "train/metadata.jsonl").read_bytes() == \
            (src / "train/metadata.jsonl").read_bytes()
        manifest = read_dataset(dst, "train").manifest
        assert manifest.style is not None
        assert "style_image_sha256" in manifest.style

    def test_rerun_is_byte_identical(self, tmp_path, extractor):
        src = tmp_path / "src"
        tiny_dataset(src)
        cfg = StyleConfig(style_image=checker_style(), iterations=2)
        stylize_dataset(src, tmp_path / "a", cfg, extractor)
        stylize_dataset(src, tmp_path / "b", cfg, extractor)
        for i in range(4):
            rel = f"train/images/{i:06d}.png"
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_resume_after_interrupt_matches_uninterrupted(self, tmp_path, extractor):
        src = tmp_path / "src"
        tiny_dataset(src)
        cfg = StyleConfig(style_image=checker_style(), iterations=2)
        stylize_dataset(src, tmp_path / "full", cfg, extractor)

        class Stop(Exception):
            pass

        def interrupt(split, index):
            if index == 1:
                raise Stop()

        with pytest.raises(Stop):
            stylize_dataset(src, tmp_path / "part", cfg, extractor, on_sample=interrupt)
        stylize_dataset(src, tmp_path / "part", cfg, extractor)
        for i in range(4):
            rel = f"train/images/{i:06d}.png"
            assert (tmp_path / "part" / rel).read_bytes() == \
                (tmp_path / "full" / rel).read_bytes()
