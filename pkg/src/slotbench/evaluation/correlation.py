"""Run-level rank and linear correlations."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import InputError, UndefinedResultError


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc * yc).sum() / np.sqrt((xc * xc).sum() * (yc * yc).sum()))


def rank_correlation(x, y, kind: str = "spearman") -> float:
    """Spearman (Pearson on average ranks) or Pearson correlation of two
    run-level metric series."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise InputError(f"series must be 1-D of equal length, got {x.shape}, {y.shape}")
    if x.size < 3:
        raise InputError(f"need at least 3 points, got {x.size}")
    if kind not in ("spearman", "pearson"):
        raise InputError(f"unknown correlation kind {kind!r}")
    if np.var(x) == 0.0 or np.var(y) == 0.0:
        raise UndefinedResultError("correlation undefined for zero-variance series")
    if kind == "spearman":
        x, y = rankdata(x), rankdata(y)
        if np.var(x) == 0.0 or np.var(y) == 0.0:
            raise UndefinedResultError("correlation undefined for constant ranks")
    return _pearson(x, y)
