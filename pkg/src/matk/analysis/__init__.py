"""Post-hoc attribution: LIME surrogates and Integrated Gradients."""

from .attribution import Attribution, InterpretableInstance, completeness_check
from .ig import (
    DEFAULT_STEPS,
    default_baseline,
    function_gradients,
    integrated_gradients,
    integrated_gradients_fn,
    path_attributions,
)
from .lime import (
    cosine_distance_to_ones,
    fit_weighted_ridge,
    kernel_weights,
    lime_explain,
    sample_masks,
)
from .meme import adapter_predict_fn, meme_instance, realized_batch
from .report import load_report, render_html, render_report

__all__ = [
    "Attribution",
    "DEFAULT_STEPS",
    "InterpretableInstance",
    "adapter_predict_fn",
    "completeness_check",
    "cosine_distance_to_ones",
    "default_baseline",
    "fit_weighted_ridge",
    "function_gradients",
    "integrated_gradients",
    "integrated_gradients_fn",
    "kernel_weights",
    "lime_explain",
    "load_report",
    "meme_instance",
    "path_attributions",
    "realized_batch",
    "render_html",
    "render_report",
    "sample_masks",
]
