"""Confusion matrix and per-class / averaged scores for labels 1..8."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..beats import CLASS_IDS
from ..errors import LengthMismatch

N_CLASSES = len(CLASS_IDS)


@dataclass(frozen=True)
class MetricsReport:
    confusion: np.ndarray  # rows = true class, columns = predicted class
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro: dict
    weighted: dict
    zero_division: bool
    labels_used: tuple[int, ...]

    def rows(self):
        """Per-class rows (class id, precision, recall, f1, support)."""
        for i, c in enumerate(CLASS_IDS):
            yield c, self.precision[i], self.recall[i], self.f1[i], int(self.support[i])


def _ratio(num, den):
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(den), where=den > 0)


def metrics(y_true, y_pred) -> MetricsReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 1 or arr.max() > N_CLASSES):
            raise ValueError("labels must lie in 1..8")
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (y_true - 1, y_pred - 1), 1)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    precision = _ratio(tp, predicted)
    recall = _ratio(tp, support)
    f1 = _ratio(2 * precision * recall, precision + recall)

    used = np.union1d(np.unique(y_true), np.unique(y_pred))
    mask = np.isin(np.array(CLASS_IDS), used)
    zero_div = bool(np.any(mask & ((predicted == 0) | (support == 0))))
    total = support.sum()

    def macro(v):
        return float(v[mask].mean()) if mask.any() else 0.0

    def weighted(v):
        return float((v * support).sum() / total) if total else 0.0

    return MetricsReport(
        confusion=cm, precision=precision, recall=recall, f1=f1, support=support,
        accuracy=float(tp.sum() / total) if total else 0.0,
        macro={"precision": macro(precision), "recall": macro(recall), "f1": macro(f1)},
        weighted={"precision": weighted(precision), "recall": weighted(recall), "f1": weighted(f1)},
        zero_division=zero_div,
        labels_used=tuple(int(c) for c in used),
    )
