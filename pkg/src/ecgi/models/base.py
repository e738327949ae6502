from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..beats import N_OUTPUTS
from ..errors import UntrainedModel

KINDS = ("NB", "RFC", "MLP", "CNN", "LSTM")
NETWORK_KINDS = ("MLP", "CNN", "LSTM")


def normalize_kind(kind: str) -> str:
    k = kind.upper()
    if k not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass
class TrainConfig:
    """Optimizer and schedule for gradient-trained models (ignored by NB)."""

    epochs: int = 10
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "TrainConfig":
        defaults = {
            "CNN": dict(epochs=10, batch_size=64),
            "LSTM": dict(epochs=10, batch_size=256),
            "MLP": dict(epochs=100, batch_size=200),
        }.get(normalize_kind(kind), {})
        defaults.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**defaults)


class Classifier:
    """Common contract: labels are 1..8, probabilities have 9 columns (column 0 unused)."""

    kind = "?"

    def __init__(self):
        self.fitted = False

    def fit(self, X: np.ndarray, y: np.ndarray) -> "Classifier":
        raise NotImplementedError

    def _proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise UntrainedModel(f"{self.kind} model has not been trained")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        return self._proba(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        p = self.predict_proba(X)
        return np.argmax(p[:, 1:], axis=1) + 1

    # serialization hooks
    def export(self) -> tuple[dict, dict[str, np.ndarray]]:
        raise NotImplementedError

    @classmethod
    def restore(cls, kind: str, meta: dict, tensors: dict[str, np.ndarray]) -> "Classifier":
        raise NotImplementedError


def check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 1 or y.max() >= N_OUTPUTS):
        raise ValueError("labels must lie in 1..8")
    return y
