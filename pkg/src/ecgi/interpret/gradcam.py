"""Gradient-weighted class activation maps over the final feature layer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..beats import BEAT_LENGTH, BeatDataset
from ..errors import EmptySelection
from ..models.networks import feature_maps, forward_trace, grad_wrt_feature_maps, _require_feature_net
from ..segments import segment_means


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    segment_weights: np.ndarray
    class_id: int
    correct: bool | None = None
    target_class: int | None = None


def cam_from_features(fmap: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Raw map ReLU(sum_k alpha_k A_k(t)) with alpha the time-mean gradient.

    Works on a single ``(T, F)`` pair or a batch ``(n, T, F)``.
    """
    alpha = grad.mean(axis=-2, keepdims=True)
    return np.maximum((fmap * alpha).sum(axis=-1), 0.0)


def upsample(raw: np.ndarray, length: int = BEAT_LENGTH) -> np.ndarray:
    """Nearest-neighbour resize along the last axis."""
    T = raw.shape[-1]
    if T == length:
        return raw
    idx = np.minimum((np.arange(length) * T) // length, T - 1)
    return raw[..., idx]


def minmax_scale(raw: np.ndarray) -> np.ndarray:
    """Scale each map to [0, 1]; an all-zero map stays zero, a flat positive one becomes ones."""
    raw = np.asarray(raw, dtype=np.float64)
    lo = raw.min(axis=-1, keepdims=True)
    hi = raw.max(axis=-1, keepdims=True)
    span = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = np.where(span > 0, (raw - lo) / np.where(span > 0, span, 1), 0.0)
    flat = (span == 0) & (hi > 0)
    return np.where(flat, 1.0, scaled)


def grad_cam(model, beat: np.ndarray, class_id: int, *, true_class: int | None = None) -> SaliencyMap:
    """Saliency of ``class_id`` for one beat."""
    trace = forward_trace(model, beat)
    grad = grad_wrt_feature_maps(model, trace.feature_map[None], [class_id])[0]
    values = minmax_scale(upsample(cam_from_features(trace.feature_map, grad)))
    predicted = int(np.argmax(trace.logits[1:]) + 1)
    label = class_id if true_class is None else true_class
    return SaliencyMap(values, segment_means(values), int(label),
                       None if true_class is None else predicted == true_class, int(class_id))


def grad_cam_batch(model, data: BeatDataset, *, batch_size: int = 256) -> list[SaliencyMap]:
    """Explain each beat's predicted class; records the true class and correctness."""
    _require_feature_net(model)
    out = []
    for start in range(0, len(data), batch_size):
        X = data.X[start : start + batch_size]
        fmaps, logits = feature_maps(model, X)
        pred = np.argmax(logits[:, 1:], axis=1) + 1
        grads = grad_wrt_feature_maps(model, fmaps, pred)
        values = minmax_scale(upsample(cam_from_features(fmaps, grads)))
        weights = segment_means(values)
        for i, y in enumerate(data.y[start : start + batch_size]):
            out.append(SaliencyMap(values[i], weights[i], int(y), bool(pred[i] == y), int(pred[i])))
    return out


@dataclass(frozen=True)
class AggregateSaliency:
    values: np.ndarray
    segment_weights: np.ndarray
    count: int


def aggregate_saliency(maps: Sequence[SaliencyMap], class_id: int | None = None,
                       correct: bool | None = None) -> AggregateSaliency:
    chosen = [m for m in maps
              if (class_id is None or m.class_id == class_id)
              and (correct is None or m.correct == correct)]
    if not chosen:
        raise EmptySelection(f"no saliency maps match class={class_id} correct={correct}")
    values = np.mean([m.values for m in chosen], axis=0)
    weights = np.mean([m.segment_weights for m in chosen], axis=0)
    return AggregateSaliency(values, weights, len(chosen))
