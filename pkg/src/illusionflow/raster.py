"""8-bit RGB raster helpers shared by stimulus rendering and visualization."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

WHITE = (255, 255, 255)


def as_rgb_u8(arr: np.ndarray) -> np.ndarray:
    """Validate/coerce an array to HxWx3 uint8."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = np.repeat(a[:, :, None], 3, axis=2)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected HxWx3 image, got shape {a.shape}")
    if a.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {a.dtype}")
    return a


def save_png(arr: np.ndarray, path) -> None:
    Image.fromarray(as_rgb_u8(arr), mode="RGB").save(Path(path), format="PNG")


def load_png(path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def resize_rgb(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of an HxWx3 uint8 image."""
    im = Image.fromarray(as_rgb_u8(arr), mode="RGB")
    return np.asarray(im.resize((width, height), Image.BILINEAR), dtype=np.uint8)


def luma(arr: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma in [0, 1] from an HxWx3 uint8 image."""
    a = as_rgb_u8(arr).astype(np.float64) / 255.0
    return 0.299 * a[:, :, 0] + 0.587 * a[:, :, 1] + 0.114 * a[:, :, 2]
