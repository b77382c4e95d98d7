"""Text-overlay removal: mask construction and inpainting."""

from __future__ import annotations

import warnings

import numpy as np

from .. import kernels
from ..errors import DimensionMismatch
from .backends import get_backend, register_backend
from .image import as_image
from .ocr import detect_text

FULL_MASK_GRAY = 128
SMOOTHING_PASSES = 3
DILATION = 2


class FullMaskWarning(UserWarning):
    pass


class DiffusionInpainter:
    """Boundary diffusion followed by a few smoothing passes.

    Each pass fills every masked pixel that has at least one known 4-neighbour
    with the mean of those neighbours, using values known before the pass.
    Three smoothing passes then average each masked pixel with its in-bounds
    4-neighbours.  Results are rounded half-to-even back to uint8.
    """

    def __init__(self, smoothing_passes: int = SMOOTHING_PASSES):
        self.smoothing_passes = smoothing_passes

    def inpaint(self, image: np.ndarray, mask: np.ndarray) -> np.ndarray:
        values = np.ascontiguousarray(image, dtype=np.float64)
        known = np.ascontiguousarray(~mask, dtype=np.uint8)
        kernels.diffuse_fill(values, known)
        kernels.smooth_masked(values, np.ascontiguousarray(mask, dtype=np.uint8),
                              self.smoothing_passes)
        filled = np.clip(np.rint(values), 0, 255).astype(image.dtype)
        out = image.copy()
        out[mask] = filled[mask]
        return out


register_backend("inpaint", "diffusion", DiffusionInpainter)
register_backend("inpaint", "stub", DiffusionInpainter)


def inpaint(image, mask, backend="diffusion") -> np.ndarray:
    """Fill the pixels where ``mask`` is set; others are returned untouched."""
    image = as_image(image)
    mask = np.asarray(mask).astype(bool)
    if mask.shape != image.shape[:2]:
        raise DimensionMismatch(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    if not mask.any():
        return image.copy()
    if mask.all():
        warnings.warn("mask covers the whole image; filling with gray", FullMaskWarning, stacklevel=2)
        return np.full_like(image, FULL_MASK_GRAY)
    out = get_backend("inpaint", backend).inpaint(image, mask)
    out[~mask] = image[~mask]
    return out


def boxes_to_mask(shape, boxes) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for x1, y1, x2, y2 in boxes:
        mask[y1:y2, x1:x2] = True
    return mask


def dilate(mask: np.ndarray, radius: int = DILATION) -> np.ndarray:
    """Square (Chebyshev) dilation by ``radius`` pixels."""
    out = mask.copy()
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            yy = np.clip(ys + dy, 0, h - 1)
            xx = np.clip(xs + dx, 0, w - 1)
            out[yy, xx] = True
    return out


def text_mask(image, ocr_backend="stub", confidence_threshold: float = 0.5) -> np.ndarray:
    pixels = as_image(image)
    regions = [r for r in detect_text(image, ocr_backend) if r.confidence >= confidence_threshold]
    return dilate(boxes_to_mask(pixels.shape[:2], [r.box for r in regions]))


def clean_image(image, ocr_backend="stub", inpaint_backend="diffusion",
                confidence_threshold: float = 0.5) -> np.ndarray:
    """Remove overlay text: detect, threshold, dilate by 2 px, inpaint."""
    mask = text_mask(image, ocr_backend, confidence_threshold)
    return inpaint(as_image(image), mask, inpaint_backend)
