"""Local surrogate explanations from random unit masks.

For ``F`` interpretable units: draw binary masks with independent fair bits
(plus the all-ones mask), query the black box on each realised mask, weight
every sample by ``exp(-D^2 / width^2)`` where ``D`` is the cosine distance to
the all-ones mask, and fit a ridge-penalised weighted linear model with an
unpenalised intercept by solving its normal equations.
"""

from __future__ import annotations

import numpy as np

from .. import rng as _rng
from ..errors import DegenerateDesign
from .attribution import Attribution, InterpretableInstance

DEFAULT_SAMPLES = 1000
DEFAULT_KERNEL_WIDTH = 0.25
DEFAULT_RIDGE = 1.0


def sample_masks(n_features: int, num_samples: int, generator) -> np.ndarray:
    """All-ones row followed by ``num_samples`` Bernoulli(0.5) rows."""
    bits = generator.integers(0, 2, size=(num_samples, n_features), dtype=np.int64)
    return np.vstack([np.ones((1, n_features), dtype=np.int64), bits])


def cosine_distance_to_ones(masks) -> np.ndarray:
    z = np.asarray(masks, dtype=np.float64)
    k = z.sum(axis=1)
    sim = np.divide(k, np.sqrt(k) * np.sqrt(z.shape[1]), out=np.zeros_like(k), where=k > 0)
    return 1.0 - sim


def kernel_weights(masks, kernel_width: float) -> np.ndarray:
    d = cosine_distance_to_ones(masks)
    return np.exp(-(d**2) / kernel_width**2)


def fit_weighted_ridge(masks, y, sample_weight, ridge_lambda: float):
    """Solve ``min sum w (y - z.coef - b)^2 + lam |coef|^2``.

    Returns ``(coef, intercept, weighted_r2)``.
    """
    z = np.asarray(masks, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(sample_weight, dtype=np.float64)
    n, f = z.shape
    x = np.hstack([z, np.ones((n, 1))])
    xtw = x.T * w
    gram = xtw @ x
    gram[np.arange(f), np.arange(f)] += ridge_lambda
    rhs = xtw @ y
    try:
        theta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        theta = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    coef, intercept = theta[:f], float(theta[f])
    pred = x @ theta
    y_bar = np.sum(w * y) / np.sum(w)
    ss_res = float(np.sum(w * (y - pred) ** 2))
    ss_tot = float(np.sum(w * (y - y_bar) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return coef, intercept, r2


def _query(predict_proba, instance, masks, target, chunk):
    out = []
    for start in range(0, len(masks), chunk):
        realized = [instance.realize(z) for z in masks[start : start + chunk]]
        probs = np.asarray(predict_proba(realized), dtype=np.float64)
        out.append(probs[:, target] if probs.ndim == 2 else probs)
    return np.concatenate(out)


def lime_explain(predict_proba, instance: InterpretableInstance, target: int,
                 num_samples: int = DEFAULT_SAMPLES, kernel_width: float = DEFAULT_KERNEL_WIDTH,
                 ridge_lambda: float = DEFAULT_RIDGE, generator=None, masks=None,
                 chunk: int = 512) -> Attribution:
    """Explain ``predict_proba``'s ``target`` output around ``instance``.

    ``predict_proba`` takes a list of realised inputs and returns an array of
    shape ``[n, C]`` (or ``[n]``).  Masks come from ``generator`` (default: the
    ``lime`` sub-stream keyed by the instance id) unless given explicitly.
    """
    f = len(instance)
    if masks is None:
        if num_samples < 10:
            raise ValueError("num_samples must be >= 10")
        gen = generator if generator is not None else _rng.derive("lime", instance.id or "")
        masks = sample_masks(f, num_samples, gen)
        if len(np.unique(masks, axis=0)) == 1:
            masks = sample_masks(f, num_samples, gen)
            if len(np.unique(masks, axis=0)) == 1:
                raise DegenerateDesign(f"all {len(masks)} sampled masks are identical")
    masks = np.asarray(masks, dtype=np.int64)
    if masks.ndim != 2 or masks.shape[1] != f:
        raise ValueError(f"masks must have shape [n, {f}]")
    y = _query(predict_proba, instance, masks, target, chunk)
    weights = kernel_weights(masks, kernel_width)
    coef, intercept, r2 = fit_weighted_ridge(masks, y, weights, ridge_lambda)
    return Attribution(coef, int(target), "lime", intercept=intercept, local_fidelity_r2=r2,
                       units=list(instance.units), id=instance.id)
