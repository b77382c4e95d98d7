"""Glue between memes, adapters and the attribution methods."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..datasets.collate import MemeRecord, collate
from ..preprocess.cache import FeatureCacheEntry
from .attribution import InterpretableInstance


class _Lookup:
    def __init__(self, items):
        self.items = items

    def get(self, id):
        return self.items[id]

    def __getitem__(self, id):
        return self.items[id]


def meme_instance(record: MemeRecord, tokenizer, entry: FeatureCacheEntry | None = None,
                  caption: str | None = None) -> InterpretableInstance:
    """Units are the record's text tokens followed by its visual regions.

    Masked tokens are removed from the text; masked regions (or the global
    embedding) are zeroed.
    """
    tokens = tokenizer.tokenize(record.text)
    units = [("token", t) for t in tokens]
    n_vis = 0
    if entry is not None and entry.kind == "regions":
        n_vis = entry.features.shape[0]
        units += [("region", tuple(float(v) for v in box)) for box in entry.boxes]
    elif entry is not None and entry.kind == "global":
        n_vis = 1
        units.append(("region", (0.0, 0.0, 1.0, 1.0)))
    n_tok = len(tokens)

    def realize(z):
        z = np.asarray(z)
        if z.shape != (len(units),):
            raise ValueError(f"mask needs {len(units)} entries, got shape {z.shape}")
        text = " ".join(t for t, keep in zip(tokens, z[:n_tok]) if keep)
        rec = replace(record, text=text)
        new_entry = entry
        if n_vis:
            keep = z[n_tok:].astype(np.float32)
            feats = entry.features * (keep[:, None] if entry.kind == "regions" else keep[0])
            new_entry = replace(entry, features=feats.astype(np.float32))
        return rec, new_entry, caption

    return InterpretableInstance(units, realize, id=record.id, handle=record)


def realized_batch(realized, tokenizer, max_len: int = 128):
    records, feats, caps = [], {}, {}
    for i, (rec, entry, caption) in enumerate(realized):
        rid = f"{rec.id}#{i}"
        records.append(replace(rec, id=rid))
        if entry is not None:
            feats[rid] = replace(entry, id=rid)
        if caption is not None:
            caps[rid] = caption
    return collate(records, tokenizer,
                   features=_Lookup(feats) if feats else None,
                   pad_id=tokenizer.pad_id, max_len=max_len,
                   captions=_Lookup(caps) if caps else None)


def adapter_predict_fn(adapter, tokenizer=None, max_len: int = 128):
    """Black-box ``predict_proba`` over realised memes for :func:`lime_explain`."""
    tokenizer = tokenizer or adapter.tokenizer

    def predict_proba(realized):
        return adapter.predict_proba(realized_batch(realized, tokenizer, max_len))

    return predict_proba
