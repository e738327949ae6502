"""Gaussian naive Bayes and a random forest of Gini trees."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..beats import N_OUTPUTS
from .base import Classifier, check_labels


class GaussianNB(Classifier):
    kind = "NB"

    def __init__(self, var_smoothing: float = 1e-9):
        super().__init__()
        self.var_smoothing = var_smoothing

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(y)
        self.present = np.unique(y)
        eps = self.var_smoothing * X.var(axis=0).max()
        self.theta = np.stack([X[y == c].mean(axis=0) for c in self.present])
        self.var = np.stack([X[y == c].var(axis=0) for c in self.present]) + eps
        self.log_prior = np.log(np.array([np.mean(y == c) for c in self.present]))
        self.fitted = True
        return self

    def _proba(self, X):
        # joint log-likelihood per present class, shape (n, k)
        jll = -0.5 * np.sum(np.log(2 * np.pi * self.var), axis=1)[None, :]
        jll = jll - 0.5 * (
            (X**2) @ (1 / self.var).T - 2 * X @ (self.theta / self.var).T
            + np.sum(self.theta**2 / self.var, axis=1)[None, :]
        )
        jll += self.log_prior
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        p /= p.sum(axis=1, keepdims=True)
        out = np.zeros((len(X), N_OUTPUTS))
        out[:, self.present] = p
        return out

    def export(self):
        meta = {"var_smoothing": self.var_smoothing}
        return meta, {"present": self.present.astype(np.float64), "theta": self.theta,
                      "var": self.var, "log_prior": self.log_prior}

    @classmethod
    def restore(cls, kind, meta, tensors):
        m = cls(meta["var_smoothing"])
        m.present = tensors["present"].astype(np.int64)
        m.theta, m.var, m.log_prior = tensors["theta"], tensors["var"], tensors["log_prior"]
        m.fitted = True
        return m


@dataclass
class ForestConfig:
    n_trees: int = 10
    max_depth: int = 10
    max_features: int | None = None  # defaults to floor(sqrt(n_features))
    min_samples_split: int = 2
    seed: int = 0


def _gini_best_split(X, y_onehot, features):
    """Best (feature, threshold, impurity) over candidate features, or None."""
    n = len(X)
    total = y_onehot.sum(axis=0)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(y_onehot[order], axis=0)[:-1]  # (n-1, k)
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        nl = np.arange(1, n, dtype=np.float64)
        nr = n - nl
        right = total - left
        gl = 1 - np.sum(left**2, axis=1) / nl**2
        gr = 1 - np.sum(right**2, axis=1) / nr**2
        imp = (nl * gl + nr * gr) / n
        imp[~valid] = np.inf
        i = int(np.argmin(imp))
        if best is None or imp[i] < best[2]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:  # midpoint rounded up onto the right value
                thr = xs[i]
            best = (int(f), float(thr), float(imp[i]))
    return best


class _Tree:
    """Array-encoded binary tree; leaves have feature == -1."""

    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def _node(self, counts):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(counts / counts.sum())
        return len(self.feature) - 1

    def grow(self, X, y_onehot, cfg: ForestConfig, max_features: int, rng):
        n_features = X.shape[1]
        stack = [(np.arange(len(X)), 0, None)]
        while stack:
            idx, depth, parent = stack.pop()
            counts = y_onehot[idx].sum(axis=0)
            node = self._node(counts)
            if parent is not None:
                p, side = parent
                (self.left if side == 0 else self.right)[p] = node
            if depth >= cfg.max_depth or len(idx) < cfg.min_samples_split or np.count_nonzero(counts) < 2:
                continue
            feats = rng.choice(n_features, size=max_features, replace=False)
            split = _gini_best_split(X[idx], y_onehot[idx], feats)
            if split is None:
                continue
            f, thr, _ = split
            go_left = X[idx, f] <= thr
            self.feature[node], self.threshold[node] = f, thr
            stack.append((idx[~go_left], depth + 1, (node, 1)))
            stack.append((idx[go_left], depth + 1, (node, 0)))
        self.finalize()
        return self

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=np.float64)

    def apply(self, X):
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            a = np.flatnonzero(active)
            f = self.feature[node[a]]
            go_left = X[a, f] <= self.threshold[node[a]]
            node[a] = np.where(go_left, self.left[node[a]], self.right[node[a]])
            active[a] = self.feature[node[a]] >= 0
        return node


class RandomForest(Classifier):
    kind = "RFC"

    def __init__(self, config: ForestConfig | None = None):
        super().__init__()
        self.config = config or ForestConfig()
        self.trees: list[_Tree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(y)
        cfg = self.config
        k = cfg.max_features or int(np.sqrt(X.shape[1]))
        onehot = np.eye(N_OUTPUTS)[y]
        rng = np.random.default_rng(cfg.seed)
        self.trees = []
        for _ in range(cfg.n_trees):
            boot = rng.integers(0, len(X), size=len(X))
            self.trees.append(_Tree().grow(X[boot], onehot[boot], cfg, min(k, X.shape[1]), rng))
        self.fitted = True
        return self

    def _proba(self, X):
        out = np.zeros((len(X), N_OUTPUTS))
        for t in self.trees:
            out += t.value[t.apply(X)]
        return out / len(self.trees)

    def export(self):
        tensors = {}
        for i, t in enumerate(self.trees):
            for name in ("feature", "threshold", "left", "right", "value"):
                tensors[f"tree{i}.{name}"] = getattr(t, name).astype(np.float64)
        return {"config": asdict(self.config), "n_trees": len(self.trees)}, tensors

    @classmethod
    def restore(cls, kind, meta, tensors):
        m = cls(ForestConfig(**meta["config"]))
        for i in range(meta["n_trees"]):
            t = _Tree()
            for name in ("feature", "left", "right"):
                setattr(t, name, tensors[f"tree{i}.{name}"].astype(np.int64))
            t.threshold = tensors[f"tree{i}.threshold"]
            t.value = tensors[f"tree{i}.value"]
            m.trees.append(t)
        m.fitted = True
        return m
