import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FIXTURES
from helpers import template_dataset
from ecgi.beats import BeatDataset
from ecgi.errors import (AllZeroDifferences, ClassTooSmall, ConstantInput, LengthMismatch, TooFewBeats,
                         TooFewGroups, TooFewValues)
from ecgi.evaluation import (confidence_interval_95, kendall_matrix, kendall_tau, kruskal_wallis,
                             leave_groups_out, metrics, run_cv, shapiro_wilk, stratified_kfold,
                             variance_per_segment, wilcoxon_matrix, wilcoxon_signed_rank)
from ecgi.evaluation.validation import derive_seed, missing_classes

REF = json.loads((FIXTURES / "stats_reference.json").read_text())
labels = arrays(np.int64, st.integers(1, 200), elements=st.integers(1, 8))


# metrics -----------------------------------------------------------------------

def test_metrics_hand_example():
    y_true = [1, 1, 2, 2, 3]
    y_pred = [1, 2, 2, 2, 1]
    r = metrics(y_true, y_pred)
    assert r.confusion[:3, :3].tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 0]]
    assert r.accuracy == pytest.approx(0.6)
    np.testing.assert_allclose(r.precision[:3], [0.5, 2 / 3, 0])
    np.testing.assert_allclose(r.recall[:3], [0.5, 1, 0])
    np.testing.assert_allclose(r.f1[:3], [0.5, 0.8, 0])
    assert r.macro["f1"] == pytest.approx((0.5 + 0.8) / 3)  # classes 4..8 are absent, so not averaged
    assert r.labels_used == (1, 2, 3)
    assert r.zero_division
    assert r.weighted["recall"] == pytest.approx(r.accuracy)


@given(labels, st.integers(0, 2**32 - 1))
def test_metrics_properties(y, seed):
    rng = np.random.default_rng(seed)
    pred = np.where(rng.random(len(y)) < 0.5, y, rng.integers(1, 9, len(y)))
    r = metrics(y, pred)
    assert r.confusion.sum() == len(y)
    assert r.accuracy == pytest.approx(np.mean(y == pred))
    assert np.all((0 <= r.f1) & (r.f1 <= 1))
    assert r.confusion.sum(axis=1).tolist() == r.support.tolist()
    perfect = metrics(y, y)
    assert perfect.accuracy == 1 and perfect.macro["f1"] == 1 and not perfect.zero_division


def test_metrics_rejects_bad_input():
    with pytest.raises(LengthMismatch):
        metrics([1, 2], [1])
    with pytest.raises(ValueError):
        metrics([0, 1], [1, 1])


# folds -------------------------------------------------------------------------

@given(arrays(np.int64, st.integers(12, 300), elements=st.integers(1, 4)), st.integers(2, 6), st.integers(0, 99))
def test_stratified_kfold_partitions(y, k, seed):
    if np.bincount(y).max(initial=0) and np.min(np.bincount(y)[np.unique(y)]) < k:
        with pytest.raises(ClassTooSmall):
            stratified_kfold(y, k, seed)
        return
    folds = stratified_kfold(y, k, seed)
    assert len(folds) == k
    tests = np.concatenate([te for _, te in folds])
    assert np.array_equal(np.sort(tests), np.arange(len(y)))
    for tr, te in folds:
        assert not np.intersect1d(tr, te).size and len(tr) + len(te) == len(y)
        for c in np.unique(y):
            share = np.sum(y[te] == c)
            assert abs(share - np.sum(y == c) / k) < 1
    sizes = [len(te) for _, te in folds]
    assert max(sizes) - min(sizes) <= 1
    again = stratified_kfold(y, k, seed)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(0, f) for f in range(6)}) == 6


def test_leave_groups_out_and_missing_classes():
    d = template_dataset(3)
    d.record[:] = np.tile([100, 104, 113, 200], len(d) // 4 + 1)[: len(d)]
    train, test = leave_groups_out(d)
    assert set(test.record) == {104, 113} and set(train.record) == {100, 200}
    assert missing_classes(test) == {s: test.class_counts()[c] for c, s in [(2, "L"), (3, "R"), (5, "A")]}


def test_run_cv_small():
    d = template_dataset(12, noise=0.02)
    res = run_cv(d, ["NB", "RFC"], k=3, seed=1)
    rows = list(res.table())
    assert len(rows) == 6 and rows[0][:2] == ("NB", 1)
    assert res.values("RFC", "accuracy").min() > 0.8
    assert res.pooled_confusion("NB").sum() == len(d)
    again = run_cv(d, ["RFC"], k=3, seed=1)
    assert np.array_equal(again.values("RFC", "f1"), res.values("RFC", "f1"))


# statistics ----------------------------------------------------------------------

def test_confidence_interval():
    lo, hi = confidence_interval_95([1.0, 2.0, 3.0])
    assert (lo + hi) / 2 == pytest.approx(2) and hi - lo == pytest.approx(2 * 1.96 * np.sqrt(2 / 3))
    with pytest.raises(TooFewValues):
        confidence_interval_95([1.0])


@given(arrays(float, st.integers(3, 60), elements=st.floats(-1e3, 1e3)))
def test_shapiro_bounds(x):
    if np.ptp(x) < 1e-9 * max(1.0, np.abs(x).max()):
        return
    r = shapiro_wilk(x)
    assert 0 < r.statistic <= 1 + 1e-12 and 0 <= r.p_value <= 1


@pytest.mark.parametrize("case", REF["shapiro"], ids=lambda c: f"n{len(c['x'])}")
def test_shapiro_matches_reference(case):
    r = shapiro_wilk(case["x"])
    assert r.statistic == pytest.approx(case["W"], abs=1e-6)
    assert r.p_value == pytest.approx(case["p"], abs=1e-5)


@pytest.mark.parametrize("case", REF["kruskal"])
def test_kruskal_matches_reference(case):
    r = kruskal_wallis(case["groups"])
    assert r.statistic == pytest.approx(case["H"], rel=1e-12)
    assert r.p_value == pytest.approx(case["p"], rel=1e-9)


def test_kruskal_errors():
    with pytest.raises(ConstantInput):
        kruskal_wallis([[1, 1], [1, 1]])
    with pytest.raises(TooFewGroups):
        kruskal_wallis([[1, 2]])


@pytest.mark.parametrize("case", REF["wilcoxon"])
def test_wilcoxon_matches_reference(case):
    r = wilcoxon_signed_rank(case["a"], case["b"])
    assert r.statistic == case["W"]
    assert r.p_value == pytest.approx(case["p"], rel=1e-9)


def test_wilcoxon_all_positive_differences():
    r = wilcoxon_signed_rank(np.arange(1.0, 7.0), np.zeros(6))
    assert r.statistic == 0 and r.p_value == pytest.approx(2 / 64, abs=1e-15)


def test_wilcoxon_symmetry_and_errors():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=10), rng.normal(size=10)
    assert wilcoxon_signed_rank(a, b).p_value == wilcoxon_signed_rank(b, a).p_value
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank(a, a)
    with pytest.raises(LengthMismatch):
        wilcoxon_signed_rank(a, b[:5])
    names, p = wilcoxon_matrix({"x": a, "y": b, "z": a})
    assert names == ["x", "y", "z"] and np.isnan(p[0, 0]) and p[0, 2] == 1.0 and p[0, 1] == p[1, 0]


@pytest.mark.parametrize("case", REF["kendall"])
def test_kendall_matches_reference(case):
    r = kendall_tau(case["a"], case["b"])
    assert r.statistic == pytest.approx(case["tau"], rel=1e-12)
    assert r.p_value == pytest.approx(case["p"], rel=1e-9)


@given(arrays(float, st.integers(2, 30), elements=st.floats(-10, 10)), st.integers(0, 10**6))
def test_kendall_properties(a, seed):
    b = np.random.default_rng(seed).permutation(a)
    if np.ptp(a) == 0:
        with pytest.raises(ConstantInput):
            kendall_tau(a, b)
        return
    assert kendall_tau(a, a).statistic == pytest.approx(1)
    assert kendall_tau(a, -a).statistic == pytest.approx(-1)
    r = kendall_tau(a, b)
    assert -1 <= r.statistic <= 1 and 0 <= r.p_value <= 1
    assert kendall_tau(b, a).statistic == pytest.approx(r.statistic)


def test_kendall_exact_small_sample():
    # n = 4, perfect agreement: 1 of 24 orderings reaches |S| = 6 in each tail
    assert kendall_tau([1, 2, 3, 4], [1, 2, 3, 4]).p_value == pytest.approx(2 / 24)


def test_kendall_matrix():
    v = {"a": np.arange(11.0), "b": np.arange(11.0)[::-1], "c": np.r_[np.arange(10.0), -1]}
    names, tau, p = kendall_matrix(v)
    assert names == ["a", "b", "c"]
    assert np.array_equal(np.diag(tau), np.ones(3)) and tau[0, 1] == pytest.approx(-1)
    assert np.allclose(tau, tau.T) and np.allclose(p, p.T)


def test_variance_per_segment():
    X = np.zeros((4, 220))
    X[:, :20] = np.array([0.0, 1.0, 2.0, 3.0])[:, None]
    d = BeatDataset(X, [1, 1, 2, 2], np.zeros(4), np.zeros(4))
    seg, point = variance_per_segment(d)
    assert seg[0] == pytest.approx(1.25) and np.all(seg[1:] == 0)
    assert point.shape == (220,) and point[0] == pytest.approx(1.25)
    assert variance_per_segment(d, 2)[0][0] == pytest.approx(0.25)
    with pytest.raises(TooFewBeats):
        variance_per_segment(d, 3)
