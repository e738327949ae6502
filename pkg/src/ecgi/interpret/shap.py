"""KernelSHAP over the 11 segment blocks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from ..beats import BeatDataset
from ..errors import SingularSystem
from ..segments import N_SEGMENTS, SEGMENT_LENGTH

MAX_RETRIES = 5


@dataclass(frozen=True)
class ShapValues:
    phi: np.ndarray
    base_value: float
    explained_output: float
    target_class: int


def background_row(background) -> np.ndarray:
    """Per-position mean of the background beats."""
    X = background.X if isinstance(background, BeatDataset) else np.asarray(background, dtype=np.float64)
    if X.size == 0:
        raise ValueError("background must be non-empty")
    return X if X.ndim == 1 else X.mean(axis=0)


def shapley_kernel(M: int, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s)
    return (M - 1) / (np.array([comb(M, int(k)) for k in s.ravel()]).reshape(s.shape) * s * (M - s))


def all_coalitions(M: int = N_SEGMENTS) -> np.ndarray:
    """Every proper, non-empty coalition as a 0/1 matrix."""
    Z = np.array(list(itertools.product((0, 1), repeat=M)), dtype=np.float64)
    size = Z.sum(axis=1)
    return Z[(size > 0) & (size < M)]


def sample_coalitions(M: int, n: int, rng) -> np.ndarray:
    """Coalition sizes drawn from the kernel's size distribution, each paired with its complement."""
    sizes = np.arange(1, M)
    p = (M - 1) / (sizes * (M - sizes))
    p /= p.sum()
    half = n // 2
    Z = np.zeros((2 * half, M))
    for i, s in enumerate(rng.choice(sizes, size=half, p=p)):
        on = rng.choice(M, size=s, replace=False)
        Z[2 * i, on] = 1
        Z[2 * i + 1] = 1 - Z[2 * i]
    return Z


def _masked_inputs(x: np.ndarray, bg: np.ndarray, Z: np.ndarray) -> np.ndarray:
    keep = np.repeat(Z, SEGMENT_LENGTH, axis=1).astype(bool)
    return np.where(keep, x[None, :], bg[None, :])


def solve_constrained(Z: np.ndarray, y: np.ndarray, w: np.ndarray, total: float) -> np.ndarray:
    """Weighted least squares for phi subject to sum(phi) == total.

    The last coordinate is eliminated so the constraint holds by construction.
    """
    M = Z.shape[1]
    A = Z[:, :-1] - Z[:, -1:]
    b = y - Z[:, -1] * total
    sw = np.sqrt(w)
    Aw, bw = A * sw[:, None], b * sw
    if np.linalg.matrix_rank(Aw) < M - 1:
        raise SingularSystem("coalition design does not identify every segment")
    head, *_ = np.linalg.lstsq(Aw, bw, rcond=None)
    return np.append(head, total - head.sum())


def kernel_shap(model, x: np.ndarray, background, n_coalitions: int = 2**N_SEGMENTS, seed: int = 0,
                target_class: int | None = None) -> ShapValues:
    M = N_SEGMENTS
    if n_coalitions < 2 * M + 2:
        raise ValueError(f"n_coalitions must be >= {2 * M + 2}")
    x = np.asarray(x, dtype=np.float64)
    bg = background_row(background)
    ends = model.predict_proba(np.stack([x, bg]))
    if target_class is None:
        target_class = int(np.argmax(ends[0, 1:]) + 1)
    fx, base = float(ends[0, target_class]), float(ends[1, target_class])

    if n_coalitions >= 2**M:
        Z = all_coalitions(M)
        w = shapley_kernel(M, Z.sum(axis=1))
        y = model.predict_proba(_masked_inputs(x, bg, Z))[:, target_class] - base
        return ShapValues(solve_constrained(Z, y, w, fx - base), base, fx, target_class)

    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        Z = sample_coalitions(M, n_coalitions, rng)
        y = model.predict_proba(_masked_inputs(x, bg, Z))[:, target_class] - base
        try:
            phi = solve_constrained(Z, y, np.ones(len(Z)), fx - base)
        except SingularSystem:
            continue
        return ShapValues(phi, base, fx, target_class)
    raise SingularSystem(f"no identifiable coalition sample after {MAX_RETRIES} attempts")


def shap_batch(model, data: BeatDataset, background, n_coalitions: int = 2**N_SEGMENTS,
               seed: int = 0, max_instances: int | None = 50) -> list[ShapValues]:
    """Explain the first ``max_instances`` beats, each with its own derived seed."""
    n = len(data) if max_instances is None else min(max_instances, len(data))
    bg = background_row(background)
    return [kernel_shap(model, data.X[i], bg, n_coalitions,
                        int(np.random.SeedSequence([seed, i]).generate_state(1)[0]))
            for i in range(n)]
