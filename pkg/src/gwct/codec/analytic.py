"""Exactly invertible multi-scale codec built from 2x2 orthonormal block
transforms.

Each analysis step splits every 2x2 pixel block into four half-scaled
butterfly combinations (average, horizontal, vertical and diagonal detail)
and stacks them on the channel axis, so level k carries 3 * 4**(k-1)
channels at 1 / 2**(k-1) resolution. The transform matrix is symmetric and
orthogonal, hence synthesis reuses the same butterfly. Useful as a fast
reference pathway: round trips are exact up to float rounding, so pipeline
identities can be tested without trained weights.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..tensorops import FeatureMap
from .base import LEVELS, CodecLevelSpec, check_image, divisor_for_level


def _analysis(x: np.ndarray) -> np.ndarray:
    # x: (C, H, W) with even H, W. Output: (4C, H/2, W/2).
    a = x[:, ::2, ::2]
    b = x[:, ::2, 1::2]
    c = x[:, 1::2, ::2]
    d = x[:, 1::2, 1::2]
    return np.concatenate(
        (
            (a + b + c + d) / 2.0,
            (a - b + c - d) / 2.0,
            (a + b - c - d) / 2.0,
            (a - b - c + d) / 2.0,
        ),
        axis=0,
    )


def _synthesis(x: np.ndarray) -> np.ndarray:
    # Inverse of _analysis; the butterfly is its own inverse.
    n = x.shape[0] // 4
    ll, lh, hl, hh = x[:n], x[n : 2 * n], x[2 * n : 3 * n], x[3 * n :]
    a = (ll + lh + hl + hh) / 2.0
    b = (ll - lh + hl - hh) / 2.0
    c = (ll + lh - hl - hh) / 2.0
    d = (ll - lh - hl + hh) / 2.0
    out = np.empty((n, x.shape[1] * 2, x.shape[2] * 2), dtype=x.dtype)
    out[:, ::2, ::2] = a
    out[:, ::2, 1::2] = b
    out[:, 1::2, ::2] = c
    out[:, 1::2, 1::2] = d
    return out


class AnalyticCodec:
    """Weight-free encoder/decoder pair over the block transform."""

    name = "analytic"
    levels = LEVELS

    def level_spec(self, level: int) -> CodecLevelSpec:
        d = divisor_for_level(level)
        return CodecLevelSpec(level=level, channels=3 * 4 ** (level - 1), spatial_divisor=d)

    def encode(self, image: np.ndarray, level: int) -> FeatureMap:
        image = check_image(image)
        spec = self.level_spec(level)
        h, w = image.shape[:2]
        if h % spec.spatial_divisor or w % spec.spatial_divisor:
            raise ShapeMismatch(
                f"image {h}x{w} is not divisible by {spec.spatial_divisor} at level {level}"
            )
        x = np.ascontiguousarray(image.transpose(2, 0, 1), dtype=np.float64)
        for _ in range(level - 1):
            x = _analysis(x)
        return FeatureMap(x.reshape(spec.channels, -1), x.shape[1], x.shape[2])

    def decode(self, features: FeatureMap, level: int) -> np.ndarray:
        spec = self.level_spec(level)
        if features.channels != spec.channels:
            raise ShapeMismatch(
                f"level {level} expects {spec.channels} channels, got {features.channels}"
            )
        x = features.data.reshape(spec.channels, features.height, features.width)
        for _ in range(level - 1):
            x = _synthesis(x)
        return np.clip(x.transpose(1, 2, 0), 0.0, 1.0)
