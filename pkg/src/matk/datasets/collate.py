"""Batch assembly: tokenisation, padding, feature gathering, batching."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..errors import MissingFeature
from .. import rng as _rng


@dataclass(frozen=True)
class MemeRecord:
    id: str
    image_ref: str
    text: str
    labels: dict = field(default_factory=dict)


@dataclass
class Batch:
    ids: list
    token_ids: np.ndarray
    attention_mask: np.ndarray
    texts: list
    labels: dict = field(default_factory=dict)
    region_features: np.ndarray | None = None
    boxes: np.ndarray | None = None
    global_embedding: np.ndarray | None = None
    captions: list | None = None
    caption_ids: np.ndarray | None = None
    caption_mask: np.ndarray | None = None

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, Batch):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if f.name == "labels":
                if a.keys() != b.keys() or any(not np.array_equal(a[k], b[k]) for k in a):
                    return False
            elif isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None or a.dtype != b.dtype or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    def replace(self, **changes) -> "Batch":
        return replace(self, **changes)


def pad_sequences(seqs, pad_id: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad integer sequences to the longest one; returns (ids, mask)."""
    width = max((len(s) for s in seqs), default=0)
    ids = np.full((len(seqs), width), pad_id, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=np.int64)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1
    return ids, mask


def _stack_labels(records) -> dict:
    if not records:
        return {}
    common = set(records[0].labels)
    for r in records[1:]:
        common &= set(r.labels)
    return {
        task: np.asarray([r.labels[task] for r in records], dtype=np.int64)
        for task in sorted(common)
    }


def collate(records, tokenizer, features=None, pad_id: int = 0, max_len: int = 128,
            captions=None) -> Batch:
    """Tokenise, truncate (keeping the head) and pad a list of records.

    ``features`` is a feature-cache handle (anything with ``get(id)``);
    ``captions`` maps id -> caption string.
    """
    records = list(records)
    seqs = [tokenizer.encode(r.text)[:max_len] for r in records]
    token_ids, mask = pad_sequences(seqs, pad_id)
    batch = Batch(
        ids=[r.id for r in records],
        token_ids=token_ids,
        attention_mask=mask,
        texts=[r.text for r in records],
        labels=_stack_labels(records),
    )
    if features is not None:
        entries = []
        for r in records:
            try:
                entries.append(features.get(r.id))
            except KeyError:
                raise MissingFeature(r.id) from None
        kinds = {e.kind for e in entries}
        if kinds == {"regions"}:
            batch.region_features = np.stack([e.features for e in entries]).astype(np.float32)
            batch.boxes = np.stack([e.boxes for e in entries]).astype(np.float32)
        elif kinds == {"global"}:
            batch.global_embedding = np.stack([e.features for e in entries]).astype(np.float32)
        elif entries:
            raise ValueError(f"mixed or unsupported feature kinds {sorted(kinds)}")
    if captions is not None:
        caps = []
        for r in records:
            try:
                caps.append(captions[r.id])
            except KeyError:
                raise MissingFeature(r.id) from None
        batch.captions = caps
        batch.caption_ids, batch.caption_mask = pad_sequences(
            [tokenizer.encode(c)[:max_len] for c in caps], pad_id
        )
    return batch


def split_batch(batch: Batch) -> list[Batch]:
    """Split into single-example batches with padding stripped."""
    out = []
    for i in range(len(batch)):
        n = int(batch.attention_mask[i].sum())
        one = Batch(
            ids=[batch.ids[i]],
            token_ids=batch.token_ids[i : i + 1, :n].copy(),
            attention_mask=batch.attention_mask[i : i + 1, :n].copy(),
            texts=[batch.texts[i]],
            labels={k: v[i : i + 1].copy() for k, v in batch.labels.items()},
        )
        for name in ("region_features", "boxes", "global_embedding"):
            arr = getattr(batch, name)
            if arr is not None:
                setattr(one, name, arr[i : i + 1].copy())
        if batch.captions is not None:
            c = int(batch.caption_mask[i].sum())
            one.captions = [batch.captions[i]]
            one.caption_ids = batch.caption_ids[i : i + 1, :c].copy()
            one.caption_mask = batch.caption_mask[i : i + 1, :c].copy()
        out.append(one)
    return out


def concat_batches(parts, pad_id: int = 0) -> Batch:
    """Inverse of :func:`split_batch`: re-pad and stack examples."""
    parts = list(parts)
    seqs = [p.token_ids[j, : int(p.attention_mask[j].sum())] for p in parts for j in range(len(p))]
    token_ids, mask = pad_sequences(seqs, pad_id)
    labels = {}
    if parts:
        common = set(parts[0].labels)
        for p in parts[1:]:
            common &= set(p.labels)
        labels = {k: np.concatenate([p.labels[k] for p in parts]) for k in sorted(common)}
    out = Batch(
        ids=[i for p in parts for i in p.ids],
        token_ids=token_ids,
        attention_mask=mask,
        texts=[t for p in parts for t in p.texts],
        labels=labels,
    )
    for name in ("region_features", "boxes", "global_embedding"):
        if parts and getattr(parts[0], name) is not None:
            setattr(out, name, np.concatenate([getattr(p, name) for p in parts]))
    if parts and parts[0].captions is not None:
        out.captions = [c for p in parts for c in p.captions]
        caps = [p.caption_ids[j, : int(p.caption_mask[j].sum())] for p in parts for j in range(len(p))]
        out.caption_ids, out.caption_mask = pad_sequences(caps, pad_id)
    return out


def epoch_permutation(n: int, epoch: int = 0) -> np.ndarray:
    return _rng.derive("shuffle", epoch).permutation(n)


def iterate_batches(records, batch_size: int, shuffle: bool = False, epoch: int = 0,
                    collate_fn=None, generator=None):
    """Yield consecutive chunks of ``records``; the last partial chunk is kept.

    With ``shuffle`` the order is a permutation drawn from the ``shuffle``
    sub-stream for ``epoch`` (or from ``generator`` when given).
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    records = list(records)
    order = np.arange(len(records))
    if shuffle:
        order = (generator.permutation(len(records)) if generator is not None
                 else epoch_permutation(len(records), epoch))
    for start in range(0, len(records), batch_size):
        chunk = [records[i] for i in order[start : start + batch_size]]
        yield collate_fn(chunk) if collate_fn is not None else chunk
