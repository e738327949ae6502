"""Metrics, evaluation protocols and statistical tests."""

from .metrics import MetricsReport, metrics
from .stats import (StatTestResult, confidence_interval_95, kendall_matrix, kendall_tau, kruskal_wallis,
                    shapiro_wilk, variance_per_segment, wilcoxon_matrix, wilcoxon_signed_rank)
from .validation import (SCORE_NAMES, CvResult, HoldoutResult, derive_seed, leave_groups_out, run_cv,
                         run_holdout, stratified_kfold)

__all__ = [
    "MetricsReport", "metrics", "StatTestResult", "confidence_interval_95", "kendall_matrix",
    "kendall_tau", "kruskal_wallis", "shapiro_wilk", "variance_per_segment", "wilcoxon_matrix",
    "wilcoxon_signed_rank", "SCORE_NAMES", "CvResult", "HoldoutResult", "derive_seed",
    "leave_groups_out", "run_cv", "run_holdout", "stratified_kfold",
]
