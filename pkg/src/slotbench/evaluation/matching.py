"""Slot-object assignment by Hungarian matching."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..data.types import RenderedSample
from ..errors import InputError
from ..models.common import SlotDecomposition


def hungarian_match(cost: np.ndarray) -> list[tuple[int, int]]:
    """Globally optimal injective assignment of min(n, m) pairs on an n*m
    cost matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.size == 0:
        raise InputError(f"cost matrix must be 2-D and non-empty, got shape {cost.shape}")
    if not np.isfinite(cost).all():
        raise InputError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class MatchResult:
    pairs: list[tuple[int, int]]       # (object index, slot index)
    unmatched_objects: list[int] = field(default_factory=list)
    cost: np.ndarray | None = None

    def slot_for_object(self, obj: int) -> int | None:
        for i, j in self.pairs:
            if i == obj:
                return j
        return None


def ground_truth_masks(sample: RenderedSample) -> tuple[list[int], np.ndarray]:
    """Visible objects (>= 1 labeled pixel) and their binary masks."""
    indices = []
    masks = []
    for k, obj in enumerate(sample.metadata.objects):
        m = sample.label_map == (k + 1)
        if m.any():
            indices.append(k)
            masks.append(m)
    stacked = np.stack(masks) if masks else np.zeros((0, *sample.label_map.shape), bool)
    return indices, stacked


def mask_cost_matrix(pred_masks: np.ndarray, gt_masks: np.ndarray) -> np.ndarray:
    """Mean per-pixel disagreement between each soft predicted mask and each
    binary ground-truth mask."""
    n, k = gt_masks.shape[0], pred_masks.shape[0]
    cost = np.zeros((n, k))
    pred = np.asarray(pred_masks, dtype=np.float64)
    for i in range(n):
        cost[i] = np.abs(pred - gt_masks[i][None].astype(np.float64)).mean(axis=(1, 2))
    return cost


def match_slots(decomp: SlotDecomposition, sample: RenderedSample, mode: str,
                probe=None) -> MatchResult:
    """Pair visible ground-truth objects with slots.

    mask mode compares predicted masks against ground-truth masks; loss mode
    asks the probe for its per-pair prediction loss.  Objects beyond
    min(n_objects, n_slots) are reported unmatched.
    """
    if mode not in ("mask", "loss"):
        raise InputError(f"unknown matching mode {mode!r}")
    object_indices, gt = ground_truth_masks(sample)
    if not object_indices:
        return MatchResult(pairs=[])

    if mode == "mask":
        pred = decomp.masks.detach().cpu().numpy()
        if pred.ndim == 4:
            pred = pred[0]
        cost = mask_cost_matrix(pred, gt)
    else:
        if probe is None:
            raise InputError("loss matching requires a probe")
        cost = probe.loss_matrix(decomp, sample, object_indices)

    pairs = hungarian_match(cost)
    matched_rows = {i for i, _ in pairs}
    return MatchResult(
        pairs=[(object_indices[i], j) for i, j in pairs],
        unmatched_objects=[object_indices[i] for i in range(len(object_indices))
                           if i not in matched_rows],
        cost=cost,
    )
