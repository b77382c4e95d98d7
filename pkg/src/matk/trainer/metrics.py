"""Accuracy, tie-aware AUROC, and split evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .. import kernels
from ..errors import EmptyInput, LengthMismatch, NoLabels, SingleClass

log = logging.getLogger(__name__)


def accuracy(pred_classes, labels) -> float:
    pred = np.asarray(pred_classes)
    true = np.asarray(labels)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.shape} predictions vs {true.shape} labels")
    if pred.size == 0:
        raise EmptyInput("accuracy of an empty input")
    return float(np.mean(pred == true))


def auroc(scores, labels) -> float:
    """P(score of a random positive > score of a random negative), ties count 1/2.

    Computed from the Mann-Whitney rank sum with mid-ranks for ties.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.shape} scores vs {labels.shape} labels")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("auroc labels must be binary 0/1")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("auroc needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    rank_sum = kernels.positive_rank_sum(
        np.ascontiguousarray(scores[order]), np.ascontiguousarray(labels[order], dtype=np.int64)
    )
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class MetricsReport:
    accuracy: float
    auroc: float | None = None
    loss: float | None = None
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "auroc": self.auroc, "loss": self.loss}


def _macro(columns_true, columns_score, columns_pred):
    accs, aucs = [], []
    for j in range(columns_true.shape[1]):
        accs.append(accuracy(columns_pred[:, j], columns_true[:, j]))
        col = columns_true[:, j]
        if col.min() == col.max():
            log.warning("skipping AUROC for label column %d: only one class present", j)
            continue
        aucs.append(auroc(columns_score[:, j], col))
    return float(np.mean(accs)), (float(np.mean(aucs)) if aucs else None)


def evaluate(adapter, batches, task: str | None = None) -> MetricsReport:
    """Accuracy (argmax / 0.5 threshold) and AUROC over every batch in ``batches``.

    Binary single-label tasks score AUROC on the positive-class probability;
    multi-label tasks macro-average per column; other tasks report no AUROC.
    """
    task = task or adapter.spec.task
    probs, labels, losses, sizes = [], [], [], []
    was_training = adapter.training
    adapter.eval()
    with torch.no_grad():
        for batch in batches:
            if task not in batch.labels:
                raise NoLabels(f"split has no labels for task {task!r}")
            logits = adapter.predict_logits(batch)
            y = batch.labels[task]
            if adapter.multilabel:
                p = torch.sigmoid(logits)
                loss = torch.nn.functional.binary_cross_entropy_with_logits(
                    logits, torch.as_tensor(y, dtype=logits.dtype))
            else:
                p = torch.softmax(logits, dim=-1)
                loss = torch.nn.functional.cross_entropy(logits, torch.as_tensor(y, dtype=torch.long))
            probs.append(p.double().numpy())
            labels.append(np.asarray(y))
            losses.append(float(loss) * len(batch))
            sizes.append(len(batch))
    adapter.train(was_training)
    if not sizes:
        raise EmptyInput("no batches to evaluate")
    probs = np.concatenate(probs)
    labels = np.concatenate(labels)
    mean_loss = float(np.sum(losses) / np.sum(sizes))
    if adapter.multilabel:
        acc, auc = _macro(labels, probs, (probs >= 0.5).astype(np.int64))
        return MetricsReport(acc, auc, mean_loss)
    acc = accuracy(probs.argmax(axis=1), labels)
    auc = None
    if probs.shape[1] == 2:
        try:
            auc = auroc(probs[:, 1], labels)
        except SingleClass:
            log.warning("AUROC undefined: evaluation labels contain one class")
    return MetricsReport(acc, auc, mean_loss)
