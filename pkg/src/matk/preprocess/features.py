"""Visual feature extraction and captioning, with deterministic stub backends."""

from __future__ import annotations

import math

import numpy as np

from .backends import get_backend, register_backend
from .image import to_unit

DEFAULT_DIM = 64

_COLOURS = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "cyan": (0.0, 1.0, 1.0),
    "magenta": (1.0, 0.0, 1.0),
    "white": (1.0, 1.0, 1.0),
    "black": (0.0, 0.0, 0.0),
    "gray": (0.5, 0.5, 0.5),
}


def grid_boxes(n: int) -> np.ndarray:
    """``n`` normalised boxes from a row-major grid with ``ceil(sqrt(n))`` columns."""
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    boxes = [
        (c / cols, r / rows, (c + 1) / cols, (r + 1) / rows)
        for r in range(rows)
        for c in range(cols)
    ]
    return np.asarray(boxes[:n], dtype=np.float64)


def patch_statistics(pixels: np.ndarray, box) -> np.ndarray:
    """Per-channel mean, std, min, max of the patch, then width, height, area.

    Box position is deliberately left out so equal patches give equal rows.
    """
    h, w = pixels.shape[:2]
    x1, y1, x2, y2 = box
    c1, c2 = int(math.floor(x1 * w)), max(int(math.ceil(x2 * w)), int(math.floor(x1 * w)) + 1)
    r1, r2 = int(math.floor(y1 * h)), max(int(math.ceil(y2 * h)), int(math.floor(y1 * h)) + 1)
    patch = pixels[r1:r2, c1:c2].reshape(-1, 3)
    bw, bh = x2 - x1, y2 - y1
    return np.concatenate([
        patch.mean(axis=0), patch.std(axis=0), patch.min(axis=0), patch.max(axis=0),
        [bw, bh, bw * bh],
    ])


def _fit(stats: np.ndarray, d: int) -> np.ndarray:
    reps = -(-d // len(stats))
    return np.tile(stats, reps)[:d]


class StubRegionExtractor:
    """Fixed grid boxes; each box described by :func:`patch_statistics` tiled to ``d``."""

    def __init__(self, d: int = DEFAULT_DIM):
        self.d = d

    def extract(self, image, n_regions: int):
        pixels = to_unit(image)
        boxes = grid_boxes(n_regions)
        feats = np.stack([_fit(patch_statistics(pixels, b), self.d) for b in boxes])
        return feats.astype(np.float32), boxes.astype(np.float32)


class StubGlobalExtractor:
    def __init__(self, d: int = DEFAULT_DIM):
        self.d = d

    def embed(self, image):
        pixels = to_unit(image)
        return _fit(patch_statistics(pixels, (0.0, 0.0, 1.0, 1.0)), self.d).astype(np.float32)


class StubCaptioner:
    """"an image with dominant color <name>" for the palette colour nearest the mean."""

    def caption(self, image):
        mean = to_unit(image).reshape(-1, 3).mean(axis=0)
        name = min(_COLOURS, key=lambda k: float(np.sum((mean - np.asarray(_COLOURS[k])) ** 2)))
        return f"an image with dominant color {name}"


register_backend("regions", "stub", StubRegionExtractor)
register_backend("global", "stub", StubGlobalExtractor)
register_backend("caption", "stub", StubCaptioner)


def extract_region_features(image, backend="stub", n_regions: int = 4):
    if n_regions < 1:
        raise ValueError("n_regions must be >= 1")
    feats, boxes = get_backend("regions", backend).extract(image, n_regions)
    return np.asarray(feats, dtype=np.float32), np.clip(np.asarray(boxes, dtype=np.float32), 0, 1)


def extract_global_embedding(image, backend="stub"):
    return np.asarray(get_backend("global", backend).embed(image), dtype=np.float32)


def generate_caption(image, backend="stub") -> str:
    text = get_backend("caption", backend).caption(image)
    if not text:
        raise ValueError("captioning backend returned an empty caption")
    return text
