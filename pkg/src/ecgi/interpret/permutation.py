"""Permutation feature importance over 20-sample segment blocks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..beats import BeatDataset
from ..errors import EmptySubset, UntrainedModel
from ..segments import N_SEGMENTS, segment_slice


@dataclass(frozen=True)
class ImportanceVector:
    weights: np.ndarray
    stdevs: np.ndarray
    n_repeats: int
    baseline: float = float("nan")
    drops: np.ndarray | None = None  # (n_repeats, 11) raw score drops


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def permutation_importance(model, data: BeatDataset, n_repeats: int = 5, seed: int = 0,
                           metric: Callable = accuracy) -> ImportanceVector:
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    if not getattr(model, "fitted", True):
        raise UntrainedModel("model has not been trained")
    X, y = data.X, data.y
    baseline = metric(y, model.predict(X))
    rng = np.random.default_rng(seed)
    scores = np.empty((n_repeats, N_SEGMENTS))
    Xp = X.copy()
    for r in range(n_repeats):
        for k in range(N_SEGMENTS):
            sl = segment_slice(k + 1)
            Xp[:, sl] = X[rng.permutation(len(X)), sl]
            scores[r, k] = metric(y, model.predict(Xp))
            Xp[:, sl] = X[:, sl]
    drops = baseline - scores
    return ImportanceVector(drops.mean(axis=0), drops.std(axis=0), n_repeats, baseline, drops)


def pfi_by_correctness(model, data: BeatDataset, n_repeats: int = 5, seed: int = 0,
                       metric: Callable = accuracy) -> tuple[ImportanceVector, ImportanceVector]:
    """Importance computed separately on correctly and wrongly classified rows."""
    hit = model.predict(data.X) == data.y
    if hit.all() or not hit.any():
        side = "misclassified" if hit.all() else "correctly classified"
        raise EmptySubset(f"no {side} rows")
    good = permutation_importance(model, data.subset(np.flatnonzero(hit)), n_repeats, seed, metric)
    bad = permutation_importance(model, data.subset(np.flatnonzero(~hit)), n_repeats, seed, metric)
    return good, bad
