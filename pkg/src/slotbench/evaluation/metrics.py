"""Segmentation and reconstruction metrics."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def masks_to_labels(masks: np.ndarray) -> np.ndarray:
    """argmax over the slot axis of a (K, H, W) stack; ties go to the lowest
    slot index."""
    masks = np.asarray(masks)
    if masks.ndim != 3:
        raise ShapeError(f"expected (K, H, W) masks, got shape {masks.shape}")
    return np.argmax(masks, axis=0).astype(np.int32)


def _comb2(x) -> int:
    x = int(x)
    return x * (x - 1) // 2


def _identical_up_to_relabeling(a: np.ndarray, b: np.ndarray) -> bool:
    pairs = np.unique(np.stack([a, b]), axis=1)
    return pairs.shape[1] == len(np.unique(a)) == len(np.unique(b))


def ari_foreground(true_labels: np.ndarray, pred_labels: np.ndarray) -> float:
    """Adjusted Rand Index restricted to pixels whose true label is > 0.

    Identical foreground partitions (up to relabeling) score exactly 1.0.
    By convention the score is 0.0 when the foreground has fewer than two
    pixels or the chance-correction denominator vanishes.
    """
    true_labels = np.asarray(true_labels)
    pred_labels = np.asarray(pred_labels)
    if true_labels.shape != pred_labels.shape:
        raise ShapeError(
            f"label shapes differ: {true_labels.shape} vs {pred_labels.shape}")

    fg = true_labels > 0
    t = true_labels[fg].ravel()
    p = pred_labels[fg].ravel()
    n = t.size
    if n < 2:
        return 0.0
    if _identical_up_to_relabeling(t, p):
        return 1.0

    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    contingency = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ti, pi), 1)

    sum_comb = sum(_comb2(nij) for nij in contingency.ravel())
    sum_a = sum(_comb2(ai) for ai in contingency.sum(axis=1))
    sum_b = sum(_comb2(bj) for bj in contingency.sum(axis=0))
    total = _comb2(n)
    expected = sum_a * sum_b / total
    max_index = (sum_a + sum_b) / 2.0
    denom = max_index - expected
    if denom == 0.0:
        return 0.0
    return float((sum_comb - expected) / denom)


def mse(image: np.ndarray, reconstruction: np.ndarray) -> float:
    """Mean squared error over every channel of every pixel."""
    image = np.asarray(image)
    reconstruction = np.asarray(reconstruction)
    if image.shape != reconstruction.shape:
        raise ShapeError(f"shapes differ: {image.shape} vs {reconstruction.shape}")
    diff = image.astype(np.float64) - reconstruction.astype(np.float64)
    return float(np.mean(diff * diff))
