"""Errors raised while converting checkpoints to weight files."""


class ExportError(Exception):
    """Base class for conversion failures."""


class CheckpointFormatError(ExportError):
    """Checkpoint is unreadable or is not a state dict of tensors."""


class MissingLayerError(ExportError):
    """A required conv layer is absent from a checkpoint."""


class LayerShapeError(ExportError):
    """A conv tensor does not match the architecture's expected shape."""
