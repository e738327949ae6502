"""Explanations over segment features and time points."""

from .gradcam import AggregateSaliency, SaliencyMap, aggregate_saliency, grad_cam, grad_cam_batch
from .noise import add_gaussian_noise
from .pdp import PdpCurve, pdp_one_way
from .permutation import ImportanceVector, pfi_by_correctness, permutation_importance
from .shap import ShapValues, kernel_shap, shap_batch

__all__ = [
    "SaliencyMap", "AggregateSaliency", "grad_cam", "grad_cam_batch", "aggregate_saliency",
    "add_gaussian_noise", "PdpCurve", "pdp_one_way", "ImportanceVector",
    "permutation_importance", "pfi_by_correctness", "ShapValues", "kernel_shap", "shap_batch",
]
