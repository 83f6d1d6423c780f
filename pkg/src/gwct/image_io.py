"""PNG input/output and the plain-text class table sidecar."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, ShapeMismatch


def load_image(path) -> np.ndarray:
    """Read a PNG (or anything Pillow handles) as H x W x 3 float64 in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        return np.asarray(rgb, dtype=np.float64) / 255.0


def save_image(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected an H x W x 3 image, got shape {image.shape}")
    quantized = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path)


def load_mask(path) -> np.ndarray:
    """Read a label mask as H x W int64 of class indices.

    Palette images keep their palette indices; grayscale images use the
    pixel value. Multi-channel masks are ambiguous and rejected.
    """
    with Image.open(path) as img:
        if img.mode in ("P", "L", "I", "I;16"):
            arr = np.asarray(img)
        else:
            raise ShapeMismatch(
                f"mask '{path}' has mode {img.mode}; expected a single-channel image"
            )
    if arr.ndim != 2:
        raise ShapeMismatch(f"mask '{path}' is not 2-dimensional")
    return arr.astype(np.int64)


def load_class_table(path) -> dict:
    """Parse an 'index:name' per line sidecar into {index: name}.

    Blank lines and lines starting with '#' are skipped.
    """
    table = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        idx_str, sep, name = line.partition(":")
        if not sep or not name.strip():
            raise FormatError(f"{path}:{lineno}: expected 'index:name', got '{line}'")
        try:
            idx = int(idx_str.strip())
        except ValueError:
            raise FormatError(f"{path}:{lineno}: class index '{idx_str.strip()}' is not an integer")
        if idx < 0:
            raise FormatError(f"{path}:{lineno}: class index must be non-negative")
        if idx in table:
            raise FormatError(f"{path}:{lineno}: duplicate class index {idx}")
        table[idx] = name.strip()
    return table


def list_frames(directory) -> list:
    """PNG frame paths of a sequence directory in name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"'{directory}' is not a directory of frames")
    frames = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not frames:
        raise FormatError(f"no .png frames found in '{directory}'")
    return frames
