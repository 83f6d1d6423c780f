"""Shared codec contracts: level specs, image padding, validation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch

LEVELS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class CodecLevelSpec:
    """Channel count and spatial downsampling factor of one codec level."""

    level: int
    channels: int
    spatial_divisor: int


def divisor_for_level(level: int) -> int:
    if level not in LEVELS:
        raise ShapeMismatch(f"level must be in 1..5, got {level}")
    return 2 ** (level - 1)


def _mirror_indices(n: int, total: int) -> np.ndarray:
    # Half-sample symmetric extension; valid for any pad width, including
    # pads wider than the source axis.
    idx = np.arange(total) % (2 * n)
    return np.where(idx < n, idx, 2 * n - 1 - idx)


def pad_to_multiple(arr: np.ndarray, divisor: int) -> np.ndarray:
    """Mirror-pad the first two axes up to the nearest multiple of ``divisor``.

    Works for images (H x W x 3) and label masks (H x W) alike so both stay
    aligned. Returns the input unchanged when no padding is needed.
    """
    h, w = arr.shape[:2]
    ht = -(-h // divisor) * divisor
    wt = -(-w // divisor) * divisor
    if ht == h and wt == w:
        return arr
    return arr[_mirror_indices(h, ht)][:, _mirror_indices(w, wt)]


def check_image(image: np.ndarray) -> np.ndarray:
    """Validate an H x W x 3 image with finite values in [0, 1]."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected an H x W x 3 image, got shape {image.shape}")
    if not np.isfinite(image).all():
        raise ShapeMismatch("image contains non-finite values")
    return image
