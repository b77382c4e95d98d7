"""Data module: one object bundling split loading, features, and batching."""

from __future__ import annotations

import os
from pathlib import Path

from ..preprocess.backends import get_backend
from ..preprocess.cache import FeatureCache, FeatureCacheEntry, read_cache, write_cache
from ..preprocess.image import load_image
from .collate import collate, iterate_batches
from .registry import SPLITS, get_schema, load_split
from .tokenizer import HashTokenizer


def cache_dir(default) -> Path:
    return Path(os.environ.get("MATK_CACHE_DIR") or default)


class DataModule:
    """Loads splits of ``spec.name`` from ``spec.root`` and yields :class:`Batch` es.

    Visual features come from ``spec.features`` when set; otherwise they are
    extracted once with ``spec.backend`` and cached under ``MATK_CACHE_DIR``
    (default ``<root>/.matk_cache``).
    """

    def __init__(self, spec, tokenizer=None, base_dir=None):
        self.spec = spec
        root = Path(spec.root)
        if base_dir is not None and not root.is_absolute():
            root = Path(base_dir) / root
        self.root = root
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.schema = get_schema(spec.name)
        self.tokenizer = tokenizer or HashTokenizer()
        self._splits: dict = {}
        self._features = None
        self._captions = None

    def _resolve(self, p):
        p = Path(p)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def records(self, split: str):
        if split not in self._splits:
            self._splits[split] = load_split(self.spec.name, split, self.root)
        return self._splits[split]

    @property
    def features(self):
        if self.spec.visual == "none":
            return None
        if self._features is None:
            if self.spec.features:
                self._features = read_cache(self._resolve(self.spec.features))
            else:
                self._features = self._build_feature_cache()
        return self._features

    @property
    def captions(self):
        if self.spec.captions is None:
            return None
        if self._captions is None:
            self._captions = read_cache(self._resolve(self.spec.captions))
        return self._captions

    def _available_splits(self):
        return [s for s in SPLITS if (self.root / f"{s}.jsonl").is_file()]

    def _build_feature_cache(self) -> FeatureCache:
        s = self.spec
        name = f"{s.name}-{s.visual}-{s.backend}-n{s.n_regions}-d{s.feature_dim}.bin"
        path = cache_dir(self.root / ".matk_cache") / name
        records = [r for split in self._available_splits() for r in self.records(split)]
        if path.is_file():
            cache = read_cache(path)
            if all(r.id in cache for r in records):
                return cache
        path.parent.mkdir(parents=True, exist_ok=True)
        extractor = get_backend(s.visual, s.backend, d=s.feature_dim)
        entries = []
        for r in records:
            pixels = load_image(self.root / r.image_ref)
            if s.visual == "regions":
                feats, boxes = extractor.extract(pixels, s.n_regions)
                entries.append(FeatureCacheEntry(r.id, "regions", feats, boxes))
            else:
                entries.append(FeatureCacheEntry(r.id, "global", extractor.embed(pixels)))
        write_cache(entries, path)
        return read_cache(path)

    def collate(self, records):
        return collate(records, self.tokenizer, features=self.features,
                       pad_id=self.tokenizer.pad_id, max_len=self.spec.max_len,
                       captions=self.captions)

    def batches(self, split: str, shuffle: bool = False, epoch: int = 0, batch_size=None):
        return iterate_batches(self.records(split), batch_size or self.spec.batch_size,
                               shuffle=shuffle, epoch=epoch, collate_fn=self.collate)
