"""Encoder/decoder pathways that map images to per-level feature maps."""

from __future__ import annotations

from ..errors import CodecNotReady
from .analytic import AnalyticCodec
from .base import LEVELS, CodecLevelSpec, check_image, divisor_for_level, pad_to_multiple
from .neural import LEVEL_CHANNELS, NeuralCodec, load_weights, weight_inventory

CODEC_NAMES = ("analytic", "neural")


def get_codec(name: str, weights_path=None):
    """Instantiate a codec by name.

    The neural codec needs a weight container; asking for it without one
    raises CodecNotReady.
    """
    if name == "analytic":
        return AnalyticCodec()
    if name == "neural":
        if weights_path is None:
            raise CodecNotReady("neural codec selected but no weight file was provided")
        return load_weights(weights_path)
    raise ValueError(f"unknown codec '{name}', expected one of {CODEC_NAMES}")


__all__ = [
    "AnalyticCodec",
    "CODEC_NAMES",
    "CodecLevelSpec",
    "LEVELS",
    "LEVEL_CHANNELS",
    "NeuralCodec",
    "check_image",
    "divisor_for_level",
    "get_codec",
    "load_weights",
    "pad_to_multiple",
    "weight_inventory",
]
