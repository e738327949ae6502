"""Shared oracles for the test suite."""

from __future__ import annotations

import numpy as np

from ecgi.beats import CLASS_SYMBOLS, BeatDataset, standardize
from ecgi.synth import beat_waveform

STEP = 1e-4


def central_difference(f, x: np.ndarray, step: float = STEP) -> np.ndarray:
    """Numerical gradient of scalar ``f()`` w.r.t. array ``x`` (perturbed in place)."""
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + step
        up = f()
        x[i] = old - step
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * step)
    return g


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Largest elementwise relative error over entries whose analytic magnitude exceeds ``floor``."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    mask = np.abs(a) > floor
    if not mask.any():
        return float(np.abs(n).max(initial=0.0) > floor)  # both should be ~0
    return float((np.abs(a - n)[mask] / np.maximum(np.abs(a), np.abs(n))[mask]).max())


def template_beats(labels, seed=0, noise=0.05) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(220, dtype=float) - 110
    return np.stack([standardize(beat_waveform(CLASS_SYMBOLS[c - 1], t, rng) + rng.normal(0, noise, 220))
                     for c in labels])


def template_dataset(per_class: int, seed=0, noise=0.05) -> BeatDataset:
    y = np.repeat(np.arange(1, 9), per_class)
    n = len(y)
    return BeatDataset(template_beats(y, seed, noise), y, np.full(n, 100), np.zeros(n))
