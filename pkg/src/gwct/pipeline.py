"""Label-aware stylization: per-region whitening/coloring against blended
model statistics, cascaded over codec levels from coarse to fine.

Each level encodes the running image, replaces the feature statistics of
every labeled region with a weighted blend of the model's per-class style
statistics, mixes the result back with the content features by alpha, and
decodes. Regions whose class the model has never seen pass through
unchanged, as do classes with alpha 0, so edits stay local to their labels.
"""

from __future__ import annotations

import time
import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import check_image, pad_to_multiple
from .cpd import StyleWeights, blend_means, reconstruct_blend
from .errors import (
    GridRequiresFourStyles,
    GwctError,
    InvalidAlpha,
    InvalidWeights,
    LevelMismatch,
    ShapeMismatch,
)
from .stylemodel import StyleModel, by_count_weights, downsample_mask, restrict_weights
from .tensorops import (
    DEFAULT_EPS,
    FeatureMap,
    FeatureStats,
    coloring_operator,
    compute_stats,
    whitening_operator,
)

DEFAULT_ALPHA = 0.6
DEFAULT_DEPTH = 4


@dataclass
class BlendSpec:
    """How to mix styles and content during stylization.

    weights : None for pixel-count defaults, a global length-n_styles
        vector, or {class_id: vector} per-class overrides (classes not in
        the dict fall back to pixel-count weights).
    alpha : style strength in [0, 1]; class_alpha overrides it per class.
        Alpha 0 leaves a region bitwise untouched.
    depth : number of codec levels to cascade (None means the model depth).
    pass_through : class ids that are never stylized.
    """

    weights: object = None
    alpha: float = DEFAULT_ALPHA
    class_alpha: dict = field(default_factory=dict)
    depth: int | None = None
    eps: float = DEFAULT_EPS
    pass_through: frozenset = frozenset()


@dataclass
class StylizeReport:
    """What happened per level and class, plus wall-clock timings."""

    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    level_seconds: dict = field(default_factory=dict)
    total_seconds: float = 0.0

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        _warnings.warn(message, stacklevel=3)


def _alpha_for(spec: BlendSpec, class_id: int) -> float:
    a = float(spec.class_alpha.get(class_id, spec.alpha))
    if not 0.0 <= a <= 1.0:
        raise InvalidAlpha(f"alpha {a} for class {class_id} outside [0, 1]")
    return a


def _weights_for(model: StyleModel, level: int, class_id: int, spec: BlendSpec, report):
    """Resolve the effective local weight vector for one model entry."""
    entry = model.entry(level, class_id)
    if isinstance(spec.weights, dict):
        vec = spec.weights.get(class_id)
    else:
        vec = spec.weights
    if vec is None:
        return by_count_weights(model, level, class_id)
    if isinstance(vec, StyleWeights):
        vec = vec.w
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.shape[0] != model.n_styles:
        raise ShapeMismatch(
            f"weight vector has length {vec.shape[0]}, model holds {model.n_styles} styles"
        )
    if vec.min() < 0:
        raise InvalidWeights("style weights must be >= 0")
    if vec.sum() <= 0:
        raise InvalidWeights("style weights sum to zero")
    local, fallback = restrict_weights(vec, entry)
    if fallback:
        report.warn(
            f"class {class_id} at level {level}: requested weights put no mass on "
            "participating style images; using pixel-count weights"
        )
        return by_count_weights(model, level, class_id)
    return local


def stylize_level(
    features: FeatureMap,
    mask_grid: np.ndarray,
    model: StyleModel,
    level: int,
    spec: BlendSpec,
    report: StylizeReport | None = None,
) -> FeatureMap:
    """Apply per-class whitening/coloring at a single codec level.

    ``mask_grid`` holds one class id per feature column (feature
    resolution). Columns of classes that are skipped keep their exact input
    values.
    """
    if report is None:
        report = StylizeReport()
    if level not in model.levels:
        raise LevelMismatch(f"model has no level {level} (depth {model.depth})")
    grid = np.asarray(mask_grid).ravel()
    if grid.shape[0] != features.n_pixels:
        raise ShapeMismatch(
            f"mask grid has {grid.shape[0]} cells, features have {features.n_pixels} columns"
        )

    out = features.data.copy()
    for cid in (int(v) for v in np.unique(grid)):
        selector = grid == cid
        n_pix = int(selector.sum())
        row = {"level": level, "class_id": cid, "n_pixels": n_pix}
        alpha = _alpha_for(spec, cid)
        if cid in spec.pass_through:
            row["action"] = "pass"
            row["reason"] = "excluded"
            report.rows.append(row)
            continue
        if alpha == 0.0:
            row["action"] = "pass"
            row["reason"] = "alpha-zero"
            report.rows.append(row)
            continue
        if not model.has_entry(level, cid):
            report.warn(
                f"class {cid} has no style statistics at level {level}; left unchanged"
            )
            row["action"] = "pass"
            row["reason"] = "absent"
            report.rows.append(row)
            continue

        entry = model.entry(level, cid)
        local = _weights_for(model, level, cid, spec, report)

        stats_c = compute_stats(features, selector)
        w_op, n_wclamp = whitening_operator(stats_c, spec.eps)
        region = features.data[:, selector]
        white = w_op @ (region - stats_c.mean[:, None])

        cov_b = reconstruct_blend(entry.factors, local)
        cov_b = (cov_b + cov_b.T) / 2.0
        target = FeatureStats(mean=blend_means(entry.means, local), cov=cov_b, count=0)
        c_op, mean_b, n_cclamp = coloring_operator(target, 0.0)
        colored = c_op @ white + mean_b[:, None]

        if alpha == 1.0:
            out[:, selector] = colored
        else:
            out[:, selector] = alpha * colored + (1.0 - alpha) * region

        row.update(
            {
                "action": "styled",
                "alpha": alpha,
                "weights": local.w.tolist(),
                "images": entry.image_indices.tolist(),
                "clamped_whiten": n_wclamp,
                "clamped_color": n_cclamp,
            }
        )
        report.rows.append(row)

    return FeatureMap(out, features.height, features.width)


def stylize_image(
    content: np.ndarray,
    mask: np.ndarray,
    model: StyleModel,
    codec,
    spec: BlendSpec | None = None,
):
    """Stylize one image; returns (image, StylizeReport).

    The cascade runs from the deepest level down to level 1, re-encoding
    the intermediate result at each step. The output keeps the input size;
    padding needed by the codec is mirrored on and cropped off internally.
    """
    if spec is None:
        spec = BlendSpec()
    content = check_image(content)
    mask = np.asarray(mask)
    if mask.shape != content.shape[:2]:
        raise ShapeMismatch(
            f"mask shape {mask.shape} does not match image {content.shape[:2]}"
        )
    if codec.name != model.codec_name:
        raise ShapeMismatch(
            f"model was built with codec '{model.codec_name}', got '{codec.name}'"
        )
    depth = model.depth if spec.depth is None else int(spec.depth)
    if not 1 <= depth <= model.depth:
        raise LevelMismatch(f"depth {depth} outside model depth 1..{model.depth}")

    report = StylizeReport()
    t_start = time.perf_counter()
    h, w = content.shape[:2]
    top_div = codec.level_spec(depth).spatial_divisor
    x = pad_to_multiple(content, top_div)
    padded_mask = pad_to_multiple(mask.astype(np.int64), top_div)

    for level in range(depth, 0, -1):
        t0 = time.perf_counter()
        divisor = codec.level_spec(level).spatial_divisor
        feats = codec.encode(x, level)
        grid = downsample_mask(padded_mask, divisor)
        feats = stylize_level(feats, grid, model, level, spec, report)
        x = codec.decode(feats, level)
        report.level_seconds[level] = time.perf_counter() - t0

    report.total_seconds = time.perf_counter() - t_start
    return x[:h, :w], report


@dataclass
class FrameResult:
    """Outcome of one frame in a sequence; error is None on success."""

    index: int
    image: np.ndarray | None
    report: StylizeReport | None
    error: str | None = None


def stylize_sequence(
    items,
    model: StyleModel,
    codec,
    spec: BlendSpec | None = None,
    workers: int | None = None,
) -> list:
    """Stylize an ordered sequence of frames on a worker pool.

    ``items`` is a sequence of (image, mask) pairs or zero-argument
    callables returning such a pair (so loading can run on the pool too).
    A failing frame is recorded in its FrameResult and the remaining frames
    still run. Results come back in input order.
    """
    items = list(items)
    if workers is None:
        workers = min(4, max(1, len(items)))

    def run(i, item):
        try:
            image, mask = item() if callable(item) else item
            out, rep = stylize_image(image, mask, model, codec, spec)
            return FrameResult(index=i, image=out, report=rep)
        except GwctError as exc:
            return FrameResult(index=i, image=None, report=None, error=str(exc))

    if workers <= 1 or len(items) <= 1:
        return [run(i, item) for i, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(items)), items))


def grid_weights(k: int) -> list:
    """Bilinear corner weights of a k x k grid.

    Cell (row, col) interpolates the four styles laid out as corners
    top-left, top-right, bottom-left, bottom-right (style indices 0..3).
    Corner cells are exactly one-hot.
    """
    if k < 2:
        raise ShapeMismatch(f"grid needs k >= 2, got {k}")
    cells = []
    for row in range(k):
        v = row / (k - 1)
        for col in range(k):
            u = col / (k - 1)
            cells.append(
                {
                    "row": row,
                    "col": col,
                    "weights": [
                        (1.0 - u) * (1.0 - v),
                        u * (1.0 - v),
                        (1.0 - u) * v,
                        u * v,
                    ],
                }
            )
    return cells


def interpolation_grid(
    content: np.ndarray,
    mask: np.ndarray,
    model: StyleModel,
    codec,
    k: int,
    spec: BlendSpec | None = None,
):
    """Render a k x k sheet of blends between four styles.

    Returns (images, manifest) where images[row][col] is the stylized frame
    for that cell and the manifest records each cell's weights. The model
    must hold exactly four styles.
    """
    if model.n_styles != 4:
        raise GridRequiresFourStyles(
            f"interpolation grid needs exactly 4 styles, model holds {model.n_styles}"
        )
    if spec is None:
        spec = BlendSpec()
    cells = grid_weights(k)
    images = [[None] * k for _ in range(k)]
    for cell in cells:
        cell_spec = replace(spec, weights=np.asarray(cell["weights"]))
        out, _ = stylize_image(content, mask, model, codec, cell_spec)
        images[cell["row"]][cell["col"]] = out
    manifest = {
        "grid": k,
        "styles": ["top-left", "top-right", "bottom-left", "bottom-right"],
        "cells": cells,
    }
    return images, manifest
