"""Overlay-text detection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backends import get_backend, register_backend
from .image import as_image


@dataclass(frozen=True)
class TextRegion:
    box: tuple  # (x1, y1, x2, y2) pixel coordinates, end-exclusive
    confidence: float


def sidecar_path(image_path) -> Path:
    p = Path(image_path)
    return p.with_name(p.stem + ".ocr.json")


class StubOCR:
    """Reads boxes from ``<stem>.ocr.json`` next to the image, if present.

    The sidecar is a JSON list of ``{"box": [x1, y1, x2, y2], "confidence": c}``
    objects; ``confidence`` defaults to 1.0.
    """

    def detect(self, pixels, source=None):
        if source is None:
            return []
        side = sidecar_path(source)
        if not side.is_file():
            return []
        items = json.loads(side.read_text(encoding="utf-8"))
        return [(item["box"], float(item.get("confidence", 1.0))) for item in items]


register_backend("ocr", "stub", StubOCR)


def _clamp(box, width, height):
    x1, y1, x2, y2 = (int(round(v)) for v in box)
    x1, x2 = sorted((min(max(x1, 0), width), min(max(x2, 0), width)))
    y1, y2 = sorted((min(max(y1, 0), height), min(max(y2, 0), height)))
    return (x1, y1, x2, y2)


def detect_text(image, backend="stub") -> list[TextRegion]:
    """Detect text boxes, clamped to the image and sorted by confidence (desc)."""
    source = image if isinstance(image, (str, Path)) else None
    pixels = as_image(image)
    height, width = pixels.shape[:2]
    raw = get_backend("ocr", backend).detect(pixels, source)
    regions = [
        TextRegion(_clamp(box, width, height), min(max(float(conf), 0.0), 1.0))
        for box, conf in raw
    ]
    return sorted(regions, key=lambda r: -r.confidence)
