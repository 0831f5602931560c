"""Neural style transfer over datasets with ground-truth preservation."""

from .extractor import FeatureExtractor, FeatureExtractorConfig, DEFAULT_WIDTHS
from .transfer import (
    StyleConfig,
    gram_matrix,
    stylize_image,
    stylize_sample,
    stylize_dataset,
    evaluate_losses,
    style_metadata,
)

__all__ = [
    "FeatureExtractor", "FeatureExtractorConfig", "DEFAULT_WIDTHS",
    "StyleConfig", "gram_matrix", "stylize_image", "stylize_sample",
    "stylize_dataset", "evaluate_losses", "style_metadata",
]
