"""CNN, LSTM and MLP classifiers on the numpy engine."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..beats import BEAT_LENGTH, N_OUTPUTS
from ..errors import NonFinite, UntrainedModel, WrongKind
from . import nn
from .base import Classifier, TrainConfig, check_labels

log = logging.getLogger(__name__)

PREDICT_BATCH = 256


@dataclass
class CnnSpec:
    conv_filters: tuple[int, ...] = (128, 32, 9)
    kernel: int = 16
    pool: int = 2
    dense: tuple[int, ...] = (512, 128, 32)
    input_length: int = BEAT_LENGTH


@dataclass
class LstmSpec:
    units: tuple[int, ...] = (128, 9)
    pool: int = 2
    dense: tuple[int, ...] = (512, 128, 32)
    input_length: int = BEAT_LENGTH


@dataclass
class MlpSpec:
    hidden: tuple[int, ...] = (100,)
    input_length: int = BEAT_LENGTH


_SPECS = {"CNN": CnnSpec, "LSTM": LstmSpec, "MLP": MlpSpec}


def _dense_head(n_in, sizes, rng, dtype):
    layers = []
    for width in sizes:
        layers += [nn.Dense(n_in, width, rng, dtype), nn.ReLU()]
        n_in = width
    layers.append(nn.Dense(n_in, N_OUTPUTS, rng, dtype, relu_init=False))
    return layers


def build_cnn(spec: CnnSpec, rng, dtype=np.float32) -> nn.Sequential:
    layers: list[nn.Layer] = []
    c_in = 1
    last = len(spec.conv_filters) - 1
    for k, filters in enumerate(spec.conv_filters):
        layers += [nn.Conv1D(c_in, filters, spec.kernel, rng, dtype), nn.ReLU()]
        if k < last:
            layers.append(nn.BatchNorm(filters, dtype))
        c_in = filters
    feature_index = len(layers) - 1
    layers += [nn.MaxPool1D(spec.pool), nn.Flatten()]
    flat = (spec.input_length // spec.pool) * c_in
    layers += _dense_head(flat, spec.dense, rng, dtype)
    return nn.Sequential(layers, feature_index=feature_index, dtype=dtype)


def build_lstm(spec: LstmSpec, rng, dtype=np.float32) -> nn.Sequential:
    layers: list[nn.Layer] = []
    n_in = 1
    for units in spec.units:
        layers.append(nn.LSTM(n_in, units, rng, dtype))
        n_in = units
    feature_index = len(layers) - 1
    layers += [nn.MaxPool1D(spec.pool), nn.Flatten()]
    flat = (spec.input_length // spec.pool) * n_in
    layers += _dense_head(flat, spec.dense, rng, dtype)
    return nn.Sequential(layers, feature_index=feature_index, dtype=dtype)


def build_mlp(spec: MlpSpec, rng, dtype=np.float32) -> nn.Sequential:
    layers: list[nn.Layer] = []
    n_in = spec.input_length
    for width in spec.hidden:
        layers += [nn.Dense(n_in, width, rng, dtype), nn.ReLU()]
        n_in = width
    layers.append(nn.Dense(n_in, N_OUTPUTS, rng, dtype, relu_init=False))
    return nn.Sequential(layers, feature_index=None, dtype=dtype)


_BUILDERS = {"CNN": build_cnn, "LSTM": build_lstm, "MLP": build_mlp}


class NetworkClassifier(Classifier):
    def __init__(self, kind: str, spec=None, config: TrainConfig | None = None):
        super().__init__()
        self.kind = kind
        self.spec = spec if spec is not None else _SPECS[kind]()
        self.config = config or TrainConfig.for_kind(kind)
        self.net: nn.Sequential | None = None
        self.history: list[float] = []

    def _shape(self, X):
        X = np.asarray(X, dtype=self.net.dtype if self.net else np.float64)
        return X if self.kind == "MLP" else X[:, :, None]

    def build(self) -> nn.Sequential:
        rng = np.random.default_rng(self.config.seed)
        self.net = _BUILDERS[self.kind](self.spec, rng, np.dtype(self.config.dtype))
        return self.net

    def fit(self, X, y):
        cfg = self.config
        y = check_labels(y)
        self.build()
        X = self._shape(X)
        rng = np.random.default_rng([cfg.seed, 1])
        opt = nn.Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
        n = len(X)
        self.history = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                logits = self.net.forward(X[idx], training=True, keep=True)
                loss, grad = nn.softmax_cross_entropy(logits, y[idx])
                if not np.isfinite(loss):
                    raise NonFinite(f"{self.kind} loss diverged at epoch {epoch + 1}")
                self.net.backward(grad.astype(self.net.dtype))
                opt.step(self.net)
                total += loss * len(idx)
            self.history.append(total / n)
            log.info("%s epoch %d/%d loss %.4f", self.kind, epoch + 1, cfg.epochs, self.history[-1])
        self._drop_caches()
        self.fitted = True
        return self

    def _drop_caches(self):
        for layer in self.net.layers:
            for attr in ("_cache", "_x", "_mask"):
                if hasattr(layer, attr):
                    delattr(layer, attr)

    def logits(self, X) -> np.ndarray:
        if not self.fitted:
            raise UntrainedModel(f"{self.kind} model has not been trained")
        X = self._shape(np.atleast_2d(X))
        out = [self.net.forward(X[i : i + PREDICT_BATCH]) for i in range(0, len(X), PREDICT_BATCH)]
        return np.concatenate(out).astype(np.float64) if out else np.zeros((0, N_OUTPUTS))

    def _proba(self, X):
        return nn.softmax(self.logits(X))

    def export(self):
        meta = {"spec": asdict(self.spec), "config": asdict(self.config)}
        return meta, dict(self.net.state_tensors())

    @classmethod
    def restore(cls, kind, meta, tensors):
        spec_cls = _SPECS[kind]
        spec = spec_cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in meta["spec"].items()})
        model = cls(kind, spec, TrainConfig(**meta["config"]))
        model.build()
        model.net.load_state(tensors)
        model.fitted = True
        return model


@dataclass
class ForwardTrace:
    """Per-layer outputs of one inference pass, batch axis removed."""

    activations: list[np.ndarray] = field(repr=False)
    feature_index: int
    feature_map: np.ndarray
    logits: np.ndarray


def _require_feature_net(model) -> NetworkClassifier:
    if not isinstance(model, NetworkClassifier) or model.net is None or model.net.feature_index is None:
        kind = getattr(model, "kind", type(model).__name__)
        raise WrongKind(f"{kind} has no convolutional or recurrent feature map")
    if not model.fitted:
        raise UntrainedModel(f"{model.kind} model has not been trained")
    return model


def forward_trace(model, beat: np.ndarray) -> ForwardTrace:
    model = _require_feature_net(model)
    x = model._shape(np.asarray(beat, dtype=np.float64).reshape(1, -1))
    outs = model.net.forward_collect(x)
    k = model.net.feature_index
    acts = [o[0] for o in outs]
    return ForwardTrace(acts, k, acts[k].astype(np.float64), acts[-1].astype(np.float64))


def feature_maps(model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched feature maps ``(n, T', F)`` and logits ``(n, 9)``."""
    model = _require_feature_net(model)
    net = model.net
    k = net.feature_index
    X = model._shape(np.atleast_2d(X))
    maps, logits = [], []
    for i in range(0, len(X), PREDICT_BATCH):
        a = X[i : i + PREDICT_BATCH]
        for layer in net.layers[: k + 1]:
            a = layer.forward(a)
        maps.append(a)
        logits.append(net.forward(a, start=k + 1))
    return np.concatenate(maps).astype(np.float64), np.concatenate(logits).astype(np.float64)


def head_logits(model, fmap: np.ndarray) -> np.ndarray:
    """Logits computed from feature maps by the layers above the feature layer."""
    net = _require_feature_net(model).net
    a = np.asarray(fmap, dtype=net.dtype)
    single = a.ndim == 2
    out = net.forward(a[None] if single else a, start=net.feature_index + 1)
    out = out.astype(np.float64)
    return out[0] if single else out


def grad_wrt_feature_maps(model, fmaps: np.ndarray, class_ids) -> np.ndarray:
    """Gradient of each row's class logit w.r.t. its own feature map."""
    net = _require_feature_net(model).net
    k = net.feature_index
    a = np.asarray(fmaps, dtype=net.dtype)
    logits = net.forward(a, keep=True, start=k + 1)
    dy = np.zeros_like(logits)
    dy[np.arange(len(a)), np.asarray(class_ids)] = 1
    grad = net.backward(dy, stop=k + 1)
    model._drop_caches()
    return grad.astype(np.float64)


def grad_wrt_activation(model, trace: ForwardTrace, class_id: int) -> np.ndarray:
    return grad_wrt_feature_maps(model, trace.feature_map[None], [class_id])[0]
