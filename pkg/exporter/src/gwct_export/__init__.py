"""Checkpoint-to-weight-file conversion for the stylization codec."""

from .architecture import (
    LEVEL_CHANNELS,
    LEVELS,
    VGG19_CONVS,
    decoder_convs,
    required_tensors,
)
from .container import WEIGHTS_MAGIC, write_weight_file
from .errors import (
    CheckpointFormatError,
    ExportError,
    LayerShapeError,
    MissingLayerError,
)
from .export import export_weights, manifest_path_for

__version__ = "0.1.0"

__all__ = [
    "LEVEL_CHANNELS",
    "LEVELS",
    "VGG19_CONVS",
    "WEIGHTS_MAGIC",
    "CheckpointFormatError",
    "ExportError",
    "LayerShapeError",
    "MissingLayerError",
    "decoder_convs",
    "export_weights",
    "manifest_path_for",
    "required_tensors",
    "write_weight_file",
]
