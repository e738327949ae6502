"""Beat classifiers behind one fit/predict contract."""

from __future__ import annotations

from ..beats import BeatDataset, class_symbol, CLASS_IDS
from ..errors import MissingClass
from .base import KINDS, NETWORK_KINDS, Classifier, TrainConfig, normalize_kind
from .io import load_model, save_model
from .networks import (
    CnnSpec,
    ForwardTrace,
    LstmSpec,
    MlpSpec,
    NetworkClassifier,
    feature_maps,
    forward_trace,
    grad_wrt_activation,
    grad_wrt_feature_maps,
    head_logits,
)
from .shallow import ForestConfig, GaussianNB, RandomForest


def make_model(kind: str, config: TrainConfig | None = None, spec=None) -> Classifier:
    kind = normalize_kind(kind)
    if kind == "NB":
        return GaussianNB()
    if kind == "RFC":
        seed = config.seed if config is not None else 0
        return RandomForest(ForestConfig(seed=seed))
    return NetworkClassifier(kind, spec, config or TrainConfig.for_kind(kind))


def fit(kind: str, train: BeatDataset, config: TrainConfig | None = None, spec=None) -> Classifier:
    """Train a classifier of ``kind`` on a dataset that contains every class."""
    counts = train.class_counts()
    missing = [class_symbol(c) for c in CLASS_IDS if counts[c] == 0]
    if missing:
        raise MissingClass(f"training set lacks classes {missing}")
    return make_model(kind, config, spec).fit(train.X, train.y)


def predict_proba(model: Classifier, X):
    return model.predict_proba(X)


__all__ = [
    "KINDS", "NETWORK_KINDS", "Classifier", "TrainConfig", "CnnSpec", "LstmSpec", "MlpSpec",
    "NetworkClassifier", "GaussianNB", "RandomForest", "ForestConfig", "ForwardTrace",
    "make_model", "fit", "predict_proba", "forward_trace", "grad_wrt_activation",
    "grad_wrt_feature_maps", "feature_maps", "head_logits", "save_model", "load_model",
]
