"""Deterministic minibatch training with per-epoch validation."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import torch

from .. import rng as _rng
from ..errors import NonFiniteLoss
from .checkpoint import save_checkpoint
from .metrics import MetricsReport, evaluate

log = logging.getLogger(__name__)

BETAS = (0.9, 0.999)
EPS = 1e-8


def _monitored(report: MetricsReport, monitor: str):
    """Value to maximise for ``monitor``; falls back to accuracy when AUROC is undefined."""
    if monitor == "loss":
        return -report.loss
    if monitor == "auroc" and report.auroc is not None:
        return report.auroc
    return report.accuracy


def make_optimizer(adapter, trainer_config):
    """AdamW: adaptive moments with decoupled weight decay."""
    return torch.optim.AdamW(
        adapter.parameters(),
        lr=trainer_config.lr,
        betas=BETAS,
        eps=EPS,
        weight_decay=trainer_config.weight_decay,
    )


def train(adapter, data, trainer_config, seed=None, out_dir=None, config_snapshot=None,
          val_split: str = "validate"):
    """Train ``adapter`` on ``data`` (a :class:`~matk.datasets.DataModule`).

    The best epoch by ``trainer_config.monitor`` (earliest on ties) is saved to
    ``<out_dir>/best`` and every epoch is appended to ``<out_dir>/metrics.jsonl``.
    Returns ``(best_checkpoint_path, report)`` with ``report`` holding the best
    epoch's validation metrics and the full history.
    """
    if seed is not None:
        _rng.seed_everything(seed)
    out_dir = Path(out_dir or trainer_config.checkpoint_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best_path = out_dir / "best"
    metrics_path = out_dir / "metrics.jsonl"
    metrics_path.write_text("", encoding="utf-8")

    optimizer = make_optimizer(adapter, trainer_config)
    history = []
    best_value, best_report = None, None
    for epoch in range(trainer_config.max_epochs):
        adapter.train()
        total, count = 0.0, 0
        for step, batch in enumerate(data.batches("train", shuffle=True, epoch=epoch)):
            optimizer.zero_grad()
            loss = adapter.loss(batch)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss is {float(loss.detach())} at epoch {epoch} step {step} (batch ids {batch.ids[:4]}...)")
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(batch)
            count += len(batch)
        val = evaluate(adapter, data.batches(val_split), adapter.spec.task)
        entry = {
            "epoch": epoch,
            "train_loss": total / max(count, 1),
            "val": val.as_dict(),
        }
        history.append(entry)
        with metrics_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        value = _monitored(val, trainer_config.monitor)
        if not math.isfinite(value):
            raise NonFiniteLoss(f"monitored metric is {value} at epoch {epoch}")
        if best_value is None or value > best_value:
            best_value, best_report = value, val
            save_checkpoint(adapter, config_snapshot, _rng.get_state(), best_path)
        log.info("epoch %d train_loss=%.4f val=%s", epoch, entry["train_loss"], val.as_dict())
    report = MetricsReport(best_report.accuracy, best_report.auroc, best_report.loss, history)
    return best_path, report
