"""Integrated Gradients along the straight line from a baseline.

With ``m`` steps, attributions are ``(x - x') * mean_k grad f(x' + k/m (x - x'))``
for ``k = 1..m`` (right Riemann sum).
"""

from __future__ import annotations

import copy
from dataclasses import replace

import numpy as np
import torch

from ..errors import ShapeMismatch
from .attribution import Attribution

DEFAULT_STEPS = 50


def path_attributions(grad_fn, x, baseline, steps: int = DEFAULT_STEPS, chunk: int = 64):
    """Elementwise IG for any ``grad_fn`` mapping a stack ``[k, *shape]`` to gradients.

    ``x`` and ``baseline`` are tensors of identical shape.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if x.shape != baseline.shape:
        raise ShapeMismatch(f"input {tuple(x.shape)} vs baseline {tuple(baseline.shape)}")
    delta = x - baseline
    total = torch.zeros_like(x)
    alphas = torch.arange(1, steps + 1, dtype=x.dtype) / steps
    for start in range(0, steps, chunk):
        a = alphas[start : start + chunk].reshape(-1, *([1] * x.dim()))
        grads = grad_fn(baseline.unsqueeze(0) + a * delta.unsqueeze(0))
        for g in grads:
            total = total + g
    return delta * total / steps


def function_gradients(fn):
    """Wrap ``fn: [k, *shape] -> [k]`` (torch) into a batched gradient function."""

    def grad_fn(points):
        pts = points.detach().clone().requires_grad_(True)
        with torch.enable_grad():
            (g,) = torch.autograd.grad(fn(pts).sum(), pts)
        return g

    return grad_fn


def integrated_gradients_fn(fn, x, baseline=None, steps: int = DEFAULT_STEPS):
    """IG of a plain differentiable function; returns ``(attributions, residual)``."""
    x = torch.as_tensor(x, dtype=torch.float64)
    baseline = torch.zeros_like(x) if baseline is None else torch.as_tensor(baseline, dtype=torch.float64)
    attr = path_attributions(function_gradients(fn), x, baseline, steps)
    with torch.no_grad():
        f_x, f_b = fn(x.unsqueeze(0))[0], fn(baseline.unsqueeze(0))[0]
    residual = abs(float(attr.sum()) - float(f_x - f_b))
    return attr.numpy(), residual


def _repeat(emb, values):
    k = values.shape[0]
    layout = {key: (list(v) * k if isinstance(v, list) else v) for key, v in emb.layout.items()}
    return replace(
        emb,
        values=values,
        mask=emb.mask.expand(k, -1),
        rows=np.repeat(emb.rows, k, axis=0),
        units=emb.units * k,
        layout=layout,
        keep_rows=None if emb.keep_rows is None else np.repeat(emb.keep_rows, k, axis=0),
    )


def default_baseline(emb):
    """All-zero embedding except rows outside any unit (CLS, pad, separators)."""
    base = torch.zeros_like(emb.values)
    if emb.keep_rows is not None:
        keep = torch.as_tensor(emb.keep_rows)
        base[keep] = emb.values[keep]
    return base


def integrated_gradients(adapter, batch, baseline=None, steps: int = DEFAULT_STEPS,
                         target=None, dtype=torch.float64) -> Attribution:
    """Attribute ``adapter``'s target score for a single-example ``batch``.

    Per-unit weights sum the attributions of every embedding row mapped to
    the unit.  The computation runs on a copy of the adapter cast to
    ``dtype`` (float64 by default).
    """
    if len(batch) != 1:
        raise ShapeMismatch("integrated_gradients expects a batch of one example")
    model = adapter
    if dtype is not None and adapter.dtype != dtype:
        model = copy.deepcopy(adapter).to(dtype)
    model.eval()
    with torch.no_grad():
        emb = model.embed_inputs(batch)
        if target is None:
            target = int(model.score_from_embedding(emb).argmax(dim=1)[0])
    x = emb.values[0]
    base = default_baseline(emb)[0] if baseline is None else torch.as_tensor(baseline, dtype=x.dtype)
    if base.dim() == x.dim() + 1:
        base = base[0]
    if base.shape != x.shape:
        raise ShapeMismatch(f"baseline {tuple(base.shape)} does not match embedding {tuple(x.shape)}")

    def grad_fn(points):
        return model.gradient(_repeat(emb, points), target)

    attr = path_attributions(grad_fn, x, base, steps)
    with torch.no_grad():
        f_x = float(model.score(emb, target)[0])
        f_b = float(model.score(emb.with_values(base.unsqueeze(0)), target)[0])
    per_row = attr.sum(dim=-1).numpy()
    rows = emb.rows[0]
    units = emb.units[0]
    weights = np.zeros(len(units))
    for r, u in enumerate(rows):
        if u >= 0:
            weights[u] += per_row[r]
    residual = abs(float(attr.sum()) - (f_x - f_b))
    target_class = int(target) if isinstance(target, (int, np.integer)) else int(np.argmax(target))
    return Attribution(weights, target_class, "ig", completeness_residual=residual,
                       units=list(units), id=batch.ids[0], f_x=f_x, f_baseline=f_b)
