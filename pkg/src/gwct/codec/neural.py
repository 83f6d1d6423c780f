"""Learned convolutional codec with one encoder tap and one decoder per level.

The encoder is a 16-layer-style conv stack (3x3 kernels, reflect padding,
ReLU, 2x2 max pooling); level k taps the activations right after the first
conv of scale block k, giving channel widths (64, 128, 256, 512, 512) at
spatial divisors (1, 2, 4, 8, 16). Each decoder mirrors its encoder prefix
with nearest-neighbor 2x upsampling where the encoder pooled, and a final
conv back to 3 channels with no activation.

All arithmetic runs in float32 to match how such weights are trained and
exported. Weights ship in a separate container file; nothing here depends
on any deep learning runtime.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..container import WEIGHTS_MAGIC, read_container
from ..errors import CodecNotReady, FormatError, IncompleteWeights, ShapeMismatch
from ..tensorops import FeatureMap
from .base import LEVELS, CodecLevelSpec, check_image, divisor_for_level

# (name, in_channels, out_channels, pooled_before) in execution order.
ENCODER_CONVS = (
    ("conv1_1", 3, 64, False),
    ("conv1_2", 64, 64, False),
    ("conv2_1", 64, 128, True),
    ("conv2_2", 128, 128, False),
    ("conv3_1", 128, 256, True),
    ("conv3_2", 256, 256, False),
    ("conv3_3", 256, 256, False),
    ("conv3_4", 256, 256, False),
    ("conv4_1", 256, 512, True),
    ("conv4_2", 512, 512, False),
    ("conv4_3", 512, 512, False),
    ("conv4_4", 512, 512, False),
    ("conv5_1", 512, 512, True),
)

# Index of the conv whose activation is the level's feature map.
_TAP = {1: 0, 2: 2, 3: 4, 4: 8, 5: 12}

LEVEL_CHANNELS = (64, 128, 256, 512, 512)


def encoder_prefix(level: int):
    if level not in _TAP:
        raise ShapeMismatch(f"level must be in 1..5, got {level}")
    return ENCODER_CONVS[: _TAP[level] + 1]


def decoder_layout(level: int):
    """Conv stack of the level's decoder, mirroring the encoder prefix.

    Returns a list of dicts with in/out channels, whether a 2x upsample
    follows the conv, and whether the conv is followed by a ReLU (all but
    the final conv back to RGB).
    """
    prefix = encoder_prefix(level)
    layout = []
    for name, in_ch, out_ch, pooled in reversed(prefix):
        layout.append(
            {
                "in_ch": out_ch,
                "out_ch": in_ch,
                "upsample_after": pooled,
                "relu": True,
            }
        )
    layout[-1]["relu"] = False
    return layout


def weight_inventory():
    """Every tensor a complete weight file must carry, with its shape."""
    inv = {}
    for name, in_ch, out_ch, _ in ENCODER_CONVS:
        inv[f"encoder/{name}.weight"] = (out_ch, in_ch, 3, 3)
        inv[f"encoder/{name}.bias"] = (out_ch,)
    for level in LEVELS:
        for i, layer in enumerate(decoder_layout(level)):
            inv[f"decoder{level}/conv{i}.weight"] = (layer["out_ch"], layer["in_ch"], 3, 3)
            inv[f"decoder{level}/conv{i}.bias"] = (layer["out_ch"],)
    return inv


def _conv3x3_reflect(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # x: (C, H, W) float32; w: (O, C, 3, 3); b: (O,). Reflect padding keeps
    # the spatial size, so H, W >= 2 is required by the pad itself.
    c, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    cols = sliding_window_view(xp, (3, 3), axis=(1, 2))
    cols = cols.transpose(0, 3, 4, 1, 2).reshape(c * 9, h * wd)
    out = w.reshape(w.shape[0], c * 9).astype(np.float32) @ cols
    out += b.astype(np.float32)[:, None]
    return out.reshape(w.shape[0], h, wd)


def _maxpool2(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def _upsample2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


class NeuralCodec:
    """Encoder/decoder pair over an in-memory weight dictionary."""

    name = "neural"
    levels = LEVELS

    def __init__(self, weights: dict, checksums: dict | None = None):
        inventory = weight_inventory()
        missing = sorted(set(inventory) - set(weights))
        if missing:
            raise IncompleteWeights(
                f"weight set is missing {len(missing)} tensors: " + ", ".join(missing)
            )
        unexpected = sorted(set(weights) - set(inventory))
        if unexpected:
            raise FormatError("unexpected tensors in weight set: " + ", ".join(unexpected))
        self._weights = {}
        for nm, shape in inventory.items():
            arr = np.asarray(weights[nm])
            if arr.shape != shape:
                raise FormatError(f"tensor '{nm}' has shape {arr.shape}, expected {shape}")
            self._weights[nm] = np.ascontiguousarray(arr, dtype=np.float32)
        self.checksums = dict(checksums) if checksums else {}

    def tensor(self, name: str) -> np.ndarray:
        """Stored float32 tensor by inventory name, for inspection."""
        return self._weights[name]

    def level_spec(self, level: int) -> CodecLevelSpec:
        d = divisor_for_level(level)
        return CodecLevelSpec(level=level, channels=LEVEL_CHANNELS[level - 1], spatial_divisor=d)

    def encode(self, image: np.ndarray, level: int) -> FeatureMap:
        image = check_image(image)
        spec = self.level_spec(level)
        h, w = image.shape[:2]
        if h % spec.spatial_divisor or w % spec.spatial_divisor:
            raise ShapeMismatch(
                f"image {h}x{w} is not divisible by {spec.spatial_divisor} at level {level}"
            )
        x = np.ascontiguousarray(image.transpose(2, 0, 1), dtype=np.float32)
        for name, _, _, pooled in encoder_prefix(level):
            if pooled:
                x = _maxpool2(x)
            x = _conv3x3_reflect(
                x, self._weights[f"encoder/{name}.weight"], self._weights[f"encoder/{name}.bias"]
            )
            np.maximum(x, 0.0, out=x)
        return FeatureMap(x.reshape(spec.channels, -1), x.shape[1], x.shape[2])

    def decode(self, features: FeatureMap, level: int) -> np.ndarray:
        spec = self.level_spec(level)
        if features.channels != spec.channels:
            raise ShapeMismatch(
                f"level {level} expects {spec.channels} channels, got {features.channels}"
            )
        x = features.data.reshape(spec.channels, features.height, features.width)
        x = x.astype(np.float32)
        for i, layer in enumerate(decoder_layout(level)):
            x = _conv3x3_reflect(
                x,
                self._weights[f"decoder{level}/conv{i}.weight"],
                self._weights[f"decoder{level}/conv{i}.bias"],
            )
            if layer["relu"]:
                np.maximum(x, 0.0, out=x)
            if layer["upsample_after"]:
                x = _upsample2(x)
        return np.clip(x.transpose(1, 2, 0).astype(np.float64), 0.0, 1.0)


def load_weights(path) -> NeuralCodec:
    """Read a weight container and return a ready codec.

    Raises IncompleteWeights when the file parses but lacks tensors,
    FormatError on structural problems, IntegrityError on checksum
    mismatches.
    """
    entries, checksums = read_container(path, WEIGHTS_MAGIC)
    for nm, arr in entries.items():
        if arr.dtype != np.float32:
            raise FormatError(f"tensor '{nm}' must be float32, found {arr.dtype}")
    return NeuralCodec(entries, checksums)


def require_weights(codec) -> None:
    if codec is None:
        raise CodecNotReady("neural codec selected but no weight file was provided")
