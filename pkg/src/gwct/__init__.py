"""Label-aware style transfer with reusable multi-style models.

Feature covariances of style image regions are stacked per label class and
factorized once; applying a style then whitens content features per region
and recolors them with any weighted blend of the stored styles, at a cost
independent of how many styles the model holds.
"""

from .codec import AnalyticCodec, NeuralCodec, get_codec, load_weights
from .cpd import (
    CpFactors,
    CpResult,
    StyleWeights,
    blend_means,
    cp_decompose,
    reconstruct_blend,
    reconstruct_slice,
)
from .errors import (
    ClassAbsent,
    CodecNotReady,
    EmptyRegion,
    EmptyStyleSet,
    FormatError,
    GridRequiresFourStyles,
    GwctError,
    IncompleteWeights,
    IntegrityError,
    InvalidAlpha,
    InvalidMatrix,
    InvalidRank,
    InvalidTensor,
    InvalidWeights,
    LevelMismatch,
    ShapeMismatch,
)
from .pipeline import (
    DEFAULT_ALPHA,
    DEFAULT_DEPTH,
    BlendSpec,
    FrameResult,
    StylizeReport,
    grid_weights,
    interpolation_grid,
    stylize_image,
    stylize_level,
    stylize_sequence,
)
from .stylemodel import (
    ModelEntry,
    StyleModel,
    build_style_model,
    by_count_weights,
    load_model,
    save_model,
)
from .tensorops import (
    FeatureMap,
    FeatureStats,
    blend_features,
    color,
    compute_stats,
    sym_eig,
    whiten,
    whitening_operator,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticCodec",
    "BlendSpec",
    "ClassAbsent",
    "CodecNotReady",
    "CpFactors",
    "CpResult",
    "DEFAULT_ALPHA",
    "DEFAULT_DEPTH",
    "EmptyRegion",
    "EmptyStyleSet",
    "FeatureMap",
    "FeatureStats",
    "FormatError",
    "FrameResult",
    "GridRequiresFourStyles",
    "GwctError",
    "IncompleteWeights",
    "IntegrityError",
    "InvalidAlpha",
    "InvalidMatrix",
    "InvalidRank",
    "InvalidTensor",
    "InvalidWeights",
    "LevelMismatch",
    "ModelEntry",
    "NeuralCodec",
    "ShapeMismatch",
    "StyleModel",
    "StyleWeights",
    "StylizeReport",
    "blend_features",
    "blend_means",
    "build_style_model",
    "by_count_weights",
    "color",
    "compute_stats",
    "cp_decompose",
    "get_codec",
    "grid_weights",
    "interpolation_grid",
    "load_model",
    "load_weights",
    "reconstruct_blend",
    "reconstruct_slice",
    "save_model",
    "stylize_image",
    "stylize_level",
    "stylize_sequence",
    "sym_eig",
    "whiten",
    "whitening_operator",
    "__version__",
]
