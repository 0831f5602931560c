"""Downstream property prediction from frozen slot representations.

A probe is a small supervised head (linear or one-hidden-layer MLP with 256
units) trained per run.  Slots are paired with ground-truth objects either
by mask disagreement (fixed) or by prediction loss (recomputed every batch
through the Hungarian solver).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..data.types import RenderedSample, SceneSpec
from ..errors import ConfigurationError, InputError
from ..models.common import SlotDecomposition
from .matching import ground_truth_masks, hungarian_match, mask_cost_matrix

MLP_HIDDEN = 256

# properties unaffected by foreground texturing; color and orientation are
# texture-confounded on styled datasets and excluded by default
DEFAULT_FEATURES = ("shape", "x", "y", "scale")


@dataclass
class ProbeConfig:
    model: str = "linear"       # linear | mlp-256
    matching: str = "loss"      # loss | mask
    features: tuple[str, ...] = DEFAULT_FEATURES
    epochs: int = 30
    lr: float = 1e-2
    batch_scenes: int = 32
    min_visibility: float = 0.05
    seed: int = 0

    def validate(self) -> None:
        if self.model not in ("linear", "mlp-256"):
            raise ConfigurationError(f"unknown probe model {self.model!r}")
        if self.matching not in ("loss", "mask"):
            raise ConfigurationError(f"unknown matching mode {self.matching!r}")
        if not self.features:
            raise ConfigurationError("at least one feature is required")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")


@dataclass
class FeatureHead:
    name: str
    kind: str            # categorical | numeric
    start: int
    stop: int
    classes: Optional[list[str]] = None

    @property
    def width(self) -> int:
        return self.stop - self.start


def build_layout(features: tuple[str, ...], schema: dict[str, Any]) -> list[FeatureHead]:
    layout = []
    offset = 0
    for name in features:
        if name not in schema:
            raise ConfigurationError(f"feature {name!r} missing from dataset schema")
        entry = schema[name]
        if entry["kind"] == "categorical":
            width = len(entry["classes"])
            layout.append(FeatureHead(name, "categorical", offset, offset + width,
                                      classes=list(entry["classes"])))
        else:
            width = int(entry.get("dims", 1))
            layout.append(FeatureHead(name, "numeric", offset, offset + width))
        offset += width
    return layout


@dataclass
class SceneRecord:
    """Frozen per-scene artifacts a probe consumes."""

    representations: np.ndarray   # (K, D)
    masks: np.ndarray             # (K, H, W)
    sample: RenderedSample


def object_targets(metadata: SceneSpec, layout: list[FeatureHead],
                   min_visibility: float) -> tuple[list[int], dict[str, np.ndarray]]:
    """Indices of sufficiently visible objects plus stacked target vectors."""
    kept = [i for i, o in enumerate(metadata.objects) if o.visibility >= min_visibility]
    targets: dict[str, np.ndarray] = {}
    for head in layout:
        values = []
        for i in kept:
            obj = metadata.objects[i]
            if head.kind == "categorical":
                values.append(head.classes.index(getattr(obj, head.name)))
            else:
                raw = getattr(obj, head.name)
                values.append(np.atleast_1d(np.asarray(raw, dtype=np.float64)))
        if head.kind == "categorical":
            targets[head.name] = np.asarray(values, dtype=np.int64)
        else:
            targets[head.name] = (np.stack(values) if values
                                  else np.zeros((0, head.width)))
    return kept, targets


class PropertyProbe(nn.Module):
    """Per-object property predictor over a single slot representation."""

    def __init__(self, rep_size: int, layout: list[FeatureHead], model: str = "linear"):
        super().__init__()
        self.layout = layout
        total = sum(h.width for h in layout)
        if model == "linear":
            self.net = nn.Linear(rep_size, total)
        elif model == "mlp-256":
            self.net = nn.Sequential(
                nn.Linear(rep_size, MLP_HIDDEN),
                nn.ReLU(),
                nn.Linear(MLP_HIDDEN, total),
            )
        else:
            raise ConfigurationError(f"unknown probe model {model!r}")

    def forward(self, reps: torch.Tensor) -> torch.Tensor:
        return self.net(reps)

    def pair_cost(self, outputs: torch.Tensor,
                  targets: dict[str, np.ndarray]) -> np.ndarray:
        """(n_objects, K) loss matrix between each object's targets and each
        slot's predictions."""
        k = outputs.shape[0]
        n = None
        cost = None
        for head in self.layout:
            y = targets[head.name]
            if n is None:
                n = len(y)
                cost = np.zeros((n, k))
            block = outputs[:, head.start:head.stop]
            if head.kind == "categorical":
                logp = F.log_softmax(block, dim=1).detach().cpu().numpy()
                cost += -logp[:, y].T
            else:
                pred = block.detach().cpu().numpy()
                diff = pred[None, :, :] - y[:, None, :]
                cost += (diff * diff).sum(axis=2)
        return cost

    def matched_loss(self, outputs: torch.Tensor, targets: dict[str, np.ndarray],
                     pairs: list[tuple[int, int]]) -> torch.Tensor:
        """Differentiable training loss over matched (object, slot) pairs:
        cross-entropy on categorical heads, squared error on numeric ones."""
        rows = torch.as_tensor([j for _, j in pairs], dtype=torch.long)
        out = outputs[rows]
        loss = outputs.new_zeros(())
        for head in self.layout:
            block = out[:, head.start:head.stop]
            y = targets[head.name]
            sel = np.asarray([i for i, _ in pairs])
            if head.kind == "categorical":
                labels = torch.as_tensor(y[sel], dtype=torch.long)
                loss = loss + F.cross_entropy(block, labels, reduction="mean")
            else:
                ref = torch.as_tensor(y[sel], dtype=block.dtype)
                loss = loss + F.mse_loss(block, ref, reduction="mean")
        return loss

    def loss_matrix(self, decomp: SlotDecomposition, sample: RenderedSample,
                    object_indices: list[int]) -> np.ndarray:
        """Adapter for match_slots: cost over the given objects and every slot."""
        reps = decomp.representations()
        if reps.dim() == 3:
            reps = reps[0]
        with torch.no_grad():
            outputs = self(reps)
        kept, targets = object_targets(sample.metadata, self.layout, min_visibility=-1.0)
        rows = [kept.index(i) for i in object_indices]
        full = self.pair_cost(outputs, targets)
        return full[rows]


def _scene_assignment(probe: PropertyProbe, record: SceneRecord,
                      kept: list[int], targets: dict[str, np.ndarray],
                      matching: str) -> list[tuple[int, int]]:
    """(row in kept, slot) pairs for one scene under the requested mode."""
    if matching == "mask":
        visible, gt = ground_truth_masks(record.sample)
        rows = [visible.index(i) for i in kept if i in visible]
        kept_positions = [pos for pos, i in enumerate(kept) if i in visible]
        if not rows:
            return []
        cost = mask_cost_matrix(record.masks, gt[rows])
        return [(kept_positions[i], j) for i, j in hungarian_match(cost)]
    reps = torch.as_tensor(record.representations, dtype=torch.float32)
    with torch.no_grad():
        outputs = probe(reps)
    cost = probe.pair_cost(outputs, targets)
    return hungarian_match(cost)


def probe_train(records: list[SceneRecord], schema: dict[str, Any],
                config: ProbeConfig) -> PropertyProbe:
    """Train a probe on frozen representations; in loss mode the Hungarian
    assignment is recomputed for every scene of every batch."""
    config.validate()
    if not records:
        raise InputError("cannot train a probe on an empty split")
    layout = build_layout(config.features, schema)
    rep_size = records[0].representations.shape[1]

    torch.manual_seed(config.seed)
    probe = PropertyProbe(rep_size, layout, config.model)
    opt = torch.optim.Adam(probe.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)

    scene_targets = []
    for rec in records:
        kept, targets = object_targets(rec.sample.metadata, layout,
                                       config.min_visibility)
        scene_targets.append((kept, targets))

    for _ in range(config.epochs):
        order = rng.permutation(len(records))
        for start in range(0, len(order), config.batch_scenes):
            batch = order[start:start + config.batch_scenes]
            losses = []
            for idx in batch:
                rec = records[idx]
                kept, targets = scene_targets[idx]
                if not kept:
                    continue
                pairs = _scene_assignment(probe, rec, kept, targets, config.matching)
                if not pairs:
                    continue
                reps = torch.as_tensor(rec.representations, dtype=torch.float32)
                losses.append(probe.matched_loss(probe(reps), targets, pairs))
            if not losses:
                continue
            loss = torch.stack(losses).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
    return probe


@dataclass
class ProbeReport:
    per_feature: dict[str, dict[str, float]]
    assignments: dict[str, int]
    aggregate: dict[str, float]
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_feature": self.per_feature,
            "assignments": self.assignments,
            "aggregate": self.aggregate,
            "config": self.config,
        }


def probe_eval(probe: PropertyProbe, records: list[SceneRecord],
               config: ProbeConfig) -> ProbeReport:
    """Per-feature accuracy (categorical) and R^2 (numeric) over matched
    pairs, with the chance baseline attached to every feature."""
    config.validate()
    layout = probe.layout
    preds: dict[str, list] = {h.name: [] for h in layout}
    truth: dict[str, list] = {h.name: [] for h in layout}
    matched = 0
    unmatched = 0

    for rec in records:
        kept, targets = object_targets(rec.sample.metadata, layout,
                                       config.min_visibility)
        if not kept:
            continue
        pairs = _scene_assignment(probe, rec, kept, targets, config.matching)
        matched += len(pairs)
        unmatched += len(kept) - len(pairs)
        if not pairs:
            continue
        reps = torch.as_tensor(rec.representations, dtype=torch.float32)
        with torch.no_grad():
            outputs = probe(reps)
        for head in layout:
            block = outputs[:, head.start:head.stop]
            for i, j in pairs:
                if head.kind == "categorical":
                    preds[head.name].append(int(block[j].argmax()))
                    truth[head.name].append(int(targets[head.name][i]))
                else:
                    preds[head.name].append(block[j].numpy())
                    truth[head.name].append(targets[head.name][i])

    per_feature = {}
    accs, r2s = [], []
    for head in layout:
        if not preds[head.name]:
            per_feature[head.name] = {"kind": head.kind, "value": float("nan"),
                                      "baseline": 0.0}
            continue
        if head.kind == "categorical":
            p = np.asarray(preds[head.name])
            t = np.asarray(truth[head.name])
            value = float((p == t).mean())
            baseline = 1.0 / len(head.classes)
            accs.append(value)
        else:
            p = np.stack(preds[head.name]).astype(np.float64)
            t = np.stack(truth[head.name]).astype(np.float64)
            dims = []
            for d in range(t.shape[1]):
                ss_res = float(((t[:, d] - p[:, d]) ** 2).sum())
                ss_tot = float(((t[:, d] - t[:, d].mean()) ** 2).sum())
                dims.append(1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
            value = float(np.mean(dims))
            baseline = 0.0
            r2s.append(value)
        per_feature[head.name] = {"kind": head.kind, "value": value,
                                  "baseline": baseline}

    aggregate = {
        "mean_accuracy": float(np.mean(accs)) if accs else float("nan"),
        "mean_r2": float(np.mean(r2s)) if r2s else float("nan"),
    }
    return ProbeReport(
        per_feature=per_feature,
        assignments={"matched": matched, "unmatched_objects": unmatched,
                     "scenes": len(records)},
        aggregate=aggregate,
        config={"model": config.model, "matching": config.matching,
                "features": list(config.features)},
    )


def extract_representations(model, reader, *, limit: int | None = None,
                            batch_size: int = 16) -> list[SceneRecord]:
    """Run the frozen model over a split and keep what probing needs."""
    was_training = model.training
    model.eval()
    n = len(reader) if limit is None else min(limit, len(reader))
    records: list[SceneRecord] = []
    with torch.no_grad():
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            samples = [reader[i] for i in range(start, stop)]
            images = torch.stack([
                torch.from_numpy(s.image).permute(2, 0, 1) for s in samples])
            decomp = model(images)
            reps = decomp.representations().cpu().numpy()
            masks = decomp.masks.cpu().numpy()
            for b, sample in enumerate(samples):
                records.append(SceneRecord(representations=reps[b],
                                           masks=masks[b], sample=sample))
    if was_training:
        model.train()
    return records
