from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import DecodeError


def load_image(path) -> np.ndarray:
    """Decode an image file into an ``H x W x 3`` uint8 array."""
    try:
        with Image.open(Path(path)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc


def save_image(image: np.ndarray, path) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path)


def as_image(image) -> np.ndarray:
    """Accept a path or an array; arrays must be ``H x W x 3``."""
    if isinstance(image, (str, Path)):
        return load_image(image)
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[..., None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DecodeError(f"expected an H x W x 3 image, got shape {arr.shape}")
    return arr


def to_unit(image) -> np.ndarray:
    """Pixel values on the [0, 1] scale as float64."""
    arr = as_image(image)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)
