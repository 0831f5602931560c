"""Metrics, slot-object matching, probes, and run-level correlations."""

from .metrics import ari_foreground, masks_to_labels, mse
from .matching import (
    MatchResult,
    ground_truth_masks,
    hungarian_match,
    mask_cost_matrix,
    match_slots,
)
from .probes import (
    DEFAULT_FEATURES,
    FeatureHead,
    ProbeConfig,
    ProbeReport,
    PropertyProbe,
    SceneRecord,
    build_layout,
    extract_representations,
    object_targets,
    probe_eval,
    probe_train,
)
from .correlation import rank_correlation

__all__ = [
    "ari_foreground", "masks_to_labels", "mse",
    "MatchResult", "ground_truth_masks", "hungarian_match", "mask_cost_matrix",
    "match_slots",
    "DEFAULT_FEATURES", "FeatureHead", "ProbeConfig", "ProbeReport",
    "PropertyProbe", "SceneRecord", "build_layout", "extract_representations",
    "object_targets", "probe_eval", "probe_train",
    "rank_correlation",
]
