"""One-way partial dependence on a segment's level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..beats import BeatDataset
from ..errors import DegenerateRange, UntrainedModel
from ..segments import segment_means, segment_slice


@dataclass(frozen=True)
class PdpCurve:
    segment_id: int
    grid: np.ndarray
    mean_response: np.ndarray
    target_class: int


def pdp_one_way(model, data: BeatDataset, segment_id: int, grid_size: int = 20,
                target_class: int | None = None) -> PdpCurve:
    """Sweep segment ``segment_id`` over a constant grid, averaging one class probability.

    The class defaults to the argmax of the mean predicted probability on the
    unmodified data, so every grid point reports the same output column.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if not getattr(model, "fitted", True):
        raise UntrainedModel("model has not been trained")
    sl = segment_slice(segment_id)
    level = segment_means(data.X)[:, segment_id - 1]
    lo, hi = float(level.min()), float(level.max())
    if not hi > lo:
        raise DegenerateRange(f"segment {segment_id} mean is constant ({lo}) over the data")
    if target_class is None:
        target_class = int(np.argmax(model.predict_proba(data.X).mean(axis=0)[1:]) + 1)
    grid = np.linspace(lo, hi, grid_size)
    response = np.empty(grid_size)
    X = data.X.copy()
    for i, v in enumerate(grid):
        X[:, sl] = v
        response[i] = model.predict_proba(X)[:, target_class].mean()
    return PdpCurve(segment_id, grid, response, target_class)
