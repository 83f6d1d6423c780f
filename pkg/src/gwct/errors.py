"""Exception hierarchy shared across the package."""


class GwctError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(GwctError):
    """Operands have incompatible dimensions."""


class EmptyRegion(GwctError):
    """A mask selected zero feature columns."""


class InvalidMatrix(GwctError):
    """Matrix contains non-finite entries or is otherwise unusable."""


class InvalidAlpha(GwctError):
    """Blend coefficient outside [0, 1]."""


class InvalidTensor(GwctError):
    """Covariance stack contains non-finite entries or has a bad shape."""


class InvalidRank(GwctError):
    """Requested CP rank is not a positive integer."""


class InvalidWeights(GwctError):
    """Style weight vector is negative or not l1-normalized."""


class CodecNotReady(GwctError):
    """Neural codec used before weights were loaded."""


class FormatError(GwctError):
    """File has a bad magic, unsupported version, or is truncated."""


class IncompleteWeights(GwctError):
    """Weight file is missing required tensors."""


class IntegrityError(GwctError):
    """Stored checksum does not match the payload."""


class EmptyStyleSet(GwctError):
    """Style model build received no images."""


class ClassAbsent(GwctError):
    """Requested class has no pixels in any participating style image."""


class LevelMismatch(GwctError):
    """Style model does not contain the requested encode level."""


class GridRequiresFourStyles(GwctError):
    """Weight-interpolation grids need a model with exactly four styles."""
