"""Adapter contract shared by all model archetypes."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .. import rng as _rng
from ..datasets.tokenizer import HashTokenizer
from .backbones import resolve_backbone


@dataclass
class Embedding:
    """Continuous model input plus its map back to interpretable units.

    ``rows[b, s]`` is the unit index of row ``s`` of example ``b`` (``-1`` for
    rows that belong to no unit: CLS, separators, padding, prompt words).
    ``units[b]`` lists ``(kind, ref)`` pairs where kind is ``token``,
    ``region`` or ``caption-token``.
    """

    values: torch.Tensor
    mask: torch.Tensor
    rows: np.ndarray
    units: list
    layout: dict = field(default_factory=dict)
    keep_rows: np.ndarray | None = None

    def with_values(self, values) -> "Embedding":
        return replace(self, values=values)


def target_weights(target, num_classes: int, dtype=torch.float32) -> torch.Tensor:
    """Class index -> one-hot; a length-C sequence is used as is."""
    if isinstance(target, (int, np.integer)):
        if not 0 <= int(target) < num_classes:
            raise ValueError(f"target {target} out of range for {num_classes} classes")
        w = torch.zeros(num_classes, dtype=dtype)
        w[int(target)] = 1.0
        return w
    w = torch.as_tensor(np.asarray(target, dtype=np.float64), dtype=dtype)
    if w.shape != (num_classes,):
        raise ValueError(f"target weights must have shape ({num_classes},)")
    return w


def init_parameters(module: nn.Module, scope: str = "") -> None:
    """Draw every parameter from its own ``init`` sub-stream.

    Biases start at zero, norm gains at one, matrices at N(0, 1/fan_in), embedding tables and
    other vectors at N(0, 0.3^2).
    """
    with torch.no_grad():
        for name, p in module.named_parameters():
            gen = _rng.derive("init", scope, name)
            if name.endswith("bias"):
                values = np.zeros(tuple(p.shape))
            elif "norm" in name:
                values = np.ones(tuple(p.shape))
            elif p.dim() == 2 and "emb" not in name:
                values = gen.normal(0.0, 1.0 / np.sqrt(p.shape[1]), size=tuple(p.shape))
            else:
                values = gen.normal(0.0, 0.3, size=tuple(p.shape))
            p.copy_(torch.as_tensor(values, dtype=p.dtype))


class ModelAdapter(nn.Module):
    """Uniform surface over a backbone.

    Subclasses implement :meth:`embed_inputs` and :meth:`score_from_embedding`;
    everything else (logits, probabilities, loss, gradients) derives from them
    so the embedding path is the prediction path.
    """

    def __init__(self, spec, tokenizer=None, multilabel: bool = False):
        super().__init__()
        self.spec = spec
        self.hidden_size = spec.hidden_size
        self.num_classes = spec.num_classes
        self.multilabel = multilabel
        self.tokenizer = tokenizer or HashTokenizer(spec.vocab_size)
        self.max_len = spec.max_len

    # -- construction helpers ------------------------------------------------
    def _backbone(self):
        return resolve_backbone(self.spec.backbone)(self.spec.hidden_size, self.spec.vocab_size)

    def reset_parameters(self):
        init_parameters(self, self.spec.name)

    @property
    def dtype(self):
        return next(self.parameters()).dtype

    def _tensor(self, array):
        return torch.as_tensor(np.asarray(array), dtype=self.dtype)

    # -- contract ------------------------------------------------------------
    def embed_inputs(self, batch) -> Embedding:
        raise NotImplementedError

    def score_from_embedding(self, emb: Embedding) -> torch.Tensor:
        raise NotImplementedError

    def predict_logits(self, batch) -> torch.Tensor:
        return self.score_from_embedding(self.embed_inputs(batch))

    def forward(self, batch):
        return self.predict_logits(batch)

    def predict_proba(self, batch) -> np.ndarray:
        with torch.no_grad():
            logits = self.predict_logits(batch)
        probs = torch.sigmoid(logits) if self.multilabel else torch.softmax(logits, dim=-1)
        return probs.double().numpy()

    def labels_of(self, batch):
        task = self.spec.task
        if task not in batch.labels:
            from ..errors import NoLabels

            raise NoLabels(f"batch carries no labels for task {task!r}")
        return batch.labels[task]

    def loss(self, batch) -> torch.Tensor:
        logits = self.predict_logits(batch)
        labels = self.labels_of(batch)
        if self.multilabel:
            return F.binary_cross_entropy_with_logits(logits, self._tensor(labels))
        return F.cross_entropy(logits, torch.as_tensor(labels, dtype=torch.long))

    def score(self, emb: Embedding, target) -> torch.Tensor:
        """Per-example target score: logits dotted with the target weights."""
        logits = self.score_from_embedding(emb)
        return logits @ target_weights(target, self.num_classes, logits.dtype)

    def gradient(self, emb: Embedding, target) -> torch.Tensor:
        """d score / d E for every example, same shape as ``emb.values``."""
        values = emb.values.detach().clone().requires_grad_(True)
        with torch.enable_grad():
            total = self.score(emb.with_values(values), target).sum()
            (grad,) = torch.autograd.grad(total, values)
        return grad

    def named_parameter_list(self):
        return [(n, p) for n, p in self.named_parameters()]

    # -- shared text plumbing ------------------------------------------------
    def _token_units(self, text: str, limit: int, kind: str = "token"):
        tokens = self.tokenizer.tokenize(text)[:limit]
        return [(kind, t) for t in tokens]
