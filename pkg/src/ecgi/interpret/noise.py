from __future__ import annotations

import numpy as np

from ..beats import BeatDataset


def add_gaussian_noise(data: BeatDataset, std_factor: float = 0.25, seed: int = 0) -> BeatDataset:
    """Add i.i.d. noise scaled by the dataset's global standard deviation."""
    if std_factor < 0:
        raise ValueError("std_factor must be >= 0")
    if std_factor == 0 or len(data) == 0:
        return data.with_samples(data.X.copy(), tag=data.tag)
    sigma = std_factor * data.X.std()
    rng = np.random.default_rng(seed)
    return data.with_samples(data.X + rng.normal(0.0, sigma, size=data.X.shape), tag=data.tag)
