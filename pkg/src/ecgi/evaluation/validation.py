"""Stratified k-fold and leave-patients-out evaluation drivers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..beats import (HOLDOUT_RECORDS, BeatDataset, PatientHoldout, SplitSpec, bootstrap_resample,
                     class_symbol, split, subsample_per_class)
from ..errors import ClassTooSmall
from ..models import TrainConfig, fit
from .metrics import MetricsReport, metrics

log = logging.getLogger(__name__)

SCORE_NAMES = ("accuracy", "precision", "recall", "f1")


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def stratified_kfold(y, k: int = 6, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-class shuffled ``array_split`` with a rotating start so fold sizes stay balanced."""
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < k:
            raise ClassTooSmall(f"class {c} has {len(idx)} rows, fewer than {k} folds")
        for j, part in enumerate(np.array_split(rng.permutation(idx), k)):
            folds[(j + offset) % k].append(part)
        offset = (offset + len(idx) % k) % k
    every = np.arange(len(y))
    out = []
    for parts in folds:
        test = np.sort(np.concatenate(parts))
        out.append((np.setdiff1d(every, test, assume_unique=True), test))
    return out


def leave_groups_out(data: BeatDataset, test_records=HOLDOUT_RECORDS) -> tuple[BeatDataset, BeatDataset]:
    return split(data, SplitSpec(PatientHoldout(tuple(test_records)), seed=0))


def _config(kind: str, seed: int, overrides: dict | None) -> TrainConfig:
    return TrainConfig.for_kind(kind, **{**(overrides or {}), "seed": seed})


def fold_scores(report: MetricsReport) -> dict[str, float]:
    return {"accuracy": report.accuracy, **report.macro}


@dataclass
class CvResult:
    k: int
    scores: dict[str, list[dict[str, float]]] = field(default_factory=dict)
    reports: dict[str, list[MetricsReport]] = field(default_factory=dict)

    def table(self):
        """Rows (model, fold, accuracy, precision, recall, f1) with 1-based folds."""
        for kind, per_fold in self.scores.items():
            for i, s in enumerate(per_fold):
                yield (kind, i + 1, *(s[n] for n in SCORE_NAMES))

    def values(self, kind: str, score: str) -> np.ndarray:
        return np.array([s[score] for s in self.scores[kind]])

    def pooled_confusion(self, kind: str) -> np.ndarray:
        return sum(r.confusion for r in self.reports[kind])


def run_cv(data: BeatDataset, kinds, k: int = 6, seed: int = 0, overrides: dict | None = None,
           subsample: int | None = None, specs: dict | None = None) -> CvResult:
    """k-fold CV on the unresampled data; each training side is bootstrap-balanced first."""
    data = subsample_per_class(data, subsample, derive_seed(seed, 99))
    folds = stratified_kfold(data.y, k, seed)
    result = CvResult(k)
    for kind in kinds:
        result.scores[kind], result.reports[kind] = [], []
        for f, (tr, te) in enumerate(folds):
            fold_seed = derive_seed(seed, f)
            train = bootstrap_resample(data.subset(tr, "train"), fold_seed)
            model = fit(kind, train, _config(kind, fold_seed, overrides), (specs or {}).get(kind))
            test = data.subset(te, "test")
            rep = metrics(test.y, model.predict(test.X))
            log.info("%s fold %d/%d accuracy %.4f", kind, f + 1, k, rep.accuracy)
            result.scores[kind].append(fold_scores(rep))
            result.reports[kind].append(rep)
    return result


@dataclass
class HoldoutResult:
    model: object
    report: MetricsReport
    train: BeatDataset
    test: BeatDataset


def run_holdout(data: BeatDataset, kind: str, spec: SplitSpec, overrides: dict | None = None,
                resample: bool = True, spec_override=None) -> HoldoutResult:
    train, test = split(data, spec)
    if resample:
        train = bootstrap_resample(train, spec.seed)
    model = fit(kind, train, _config(kind, spec.seed, overrides), spec_override)
    return HoldoutResult(model, metrics(test.y, model.predict(test.X)), train, test)


def missing_classes(data: BeatDataset, symbols=("L", "R", "A")) -> dict[str, int]:
    counts = data.class_counts()
    return {class_symbol(c): counts[c] for c in counts if class_symbol(c) in symbols}
