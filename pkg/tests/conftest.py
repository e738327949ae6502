from __future__ import annotations

import os
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE = {
    1: "Format-212 decode and annotations of record 100 match the reference fixture (<1 s)",
    2: "Beat-holdout bootstrap resample: uniform class counts within 5% of 3989 (<1 min)",
    3: "Analytic gradients of every layer and of small nets match central differences (<= 1e-4, 3 seeds)",
    4: "Stratified 6-fold CV accuracy: CNN and LSTM above their gates",
    5: "Leave-groups-out: CNN accuracy >= 0.90 and no L/R/A beats in the test set",
    6: "PFI: CNN and RFC have at least two top-3 segments in {5,6,7}",
    7: "Grad-CAM: class-L argmax in QRS, zero-gradient map, toy-net hand check",
    8: "KernelSHAP: exact enumeration, additive closed form, sampled efficiency (<= 1e-9)",
    9: "Statistics oracles: Wilcoxon, Kruskal-Wallis, Kendall tau, Shapiro-Wilk",
    10: "Noise robustness: accuracy drop <= 10 points, class-L argmax stays in QRS",
    11: "Determinism: two seeded pipeline runs give byte-identical CSV outputs",
}


def pytest_addoption(parser):
    parser.addoption("--mitdb", default=str(ROOT / "data" / "mitdb"),
                     help="directory holding the MIT-BIH Arrhythmia Database records")
    parser.addoption("--cv-subsample", default="2000",
                     help="per-class cap for the CV criterion; 'none' runs the full dataset")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criterion_outcomes = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.failed or report.skipped):
        item.config._criterion_outcomes[mark.args[0]].append(report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = config._criterion_outcomes
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        results = outcomes.get(n)
        if not results:
            continue
        status = "PASS" if all(o == "passed" for o in results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {ACCEPTANCE[n]}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
