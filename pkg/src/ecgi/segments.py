"""Fixed 11 x 20-sample tiling of a 220-point beat.

Segment ids are 1-based throughout the public API; arrays of per-segment
values are indexed 0..10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beats import BEAT_LENGTH
from .errors import LengthMismatch, OutOfRange

N_SEGMENTS = 11
SEGMENT_LENGTH = BEAT_LENGTH // N_SEGMENTS
QRS_SEGMENTS = (5, 6, 7)


def segment_slice(segment_id: int) -> slice:
    if not 1 <= segment_id <= N_SEGMENTS:
        raise OutOfRange(f"segment id {segment_id} not in 1..{N_SEGMENTS}")
    return slice(SEGMENT_LENGTH * (segment_id - 1), SEGMENT_LENGTH * segment_id)


def region_of(segment_id: int) -> str:
    if not 1 <= segment_id <= N_SEGMENTS:
        raise OutOfRange(f"segment id {segment_id} not in 1..{N_SEGMENTS}")
    if segment_id <= 4:
        return "PR"
    if segment_id <= 7:
        return "QRS"
    return "ST"


@dataclass(frozen=True)
class SegmentProfile:
    means: np.ndarray

    def __post_init__(self):
        if np.shape(self.means) != (N_SEGMENTS,):
            raise LengthMismatch(f"profile must have {N_SEGMENTS} values")


def segment_means(beats: np.ndarray) -> np.ndarray:
    """Per-segment averages over the last axis: ``(..., 220) -> (..., 11)``."""
    x = np.asarray(beats, dtype=np.float64)
    if x.shape[-1] != BEAT_LENGTH:
        raise LengthMismatch(f"beat length {x.shape[-1]} != {BEAT_LENGTH}")
    return x.reshape(*x.shape[:-1], N_SEGMENTS, SEGMENT_LENGTH).mean(axis=-1)


def profile(beat: np.ndarray) -> SegmentProfile:
    return SegmentProfile(segment_means(beat))


def reconstruct(means) -> np.ndarray:
    """Piecewise-constant beat with each segment set to its mean."""
    m = means.means if isinstance(means, SegmentProfile) else np.asarray(means, dtype=np.float64)
    if m.shape[-1] != N_SEGMENTS:
        raise LengthMismatch(f"expected {N_SEGMENTS} segment values")
    return np.repeat(m, SEGMENT_LENGTH, axis=-1)


def argmax_segment(values: np.ndarray) -> int:
    """1-based id of the largest entry of an 11-vector."""
    return int(np.argmax(values)) + 1
