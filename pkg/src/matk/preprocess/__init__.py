"""Offline image preprocessing: text removal, visual features, captions, caching."""

from .backends import available, get_backend, register_backend
from .cache import FeatureCache, FeatureCacheEntry, read_cache, write_cache
from .features import (
    extract_global_embedding,
    extract_region_features,
    generate_caption,
    grid_boxes,
)
from .image import load_image, save_image
from .inpaint import FullMaskWarning, clean_image, dilate, inpaint, text_mask
from .ocr import TextRegion, detect_text

__all__ = [
    "FeatureCache",
    "FeatureCacheEntry",
    "FullMaskWarning",
    "TextRegion",
    "available",
    "clean_image",
    "detect_text",
    "dilate",
    "extract_global_embedding",
    "extract_region_features",
    "generate_caption",
    "get_backend",
    "grid_boxes",
    "inpaint",
    "load_image",
    "read_cache",
    "register_backend",
    "save_image",
    "text_mask",
    "write_cache",
]
