"""Reusable multi-image style models.

A style model holds, per codec level and per label class, the factorized
covariance stack of all style images that show enough of that class, plus
the per-image channel means. Factorizing the stack once makes any convex
combination of the input styles available at apply time as a cheap linear
blend in the factor domain, without revisiting the style images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .container import MODEL_MAGIC, read_container, write_container
from .cpd import CpFactors, StyleWeights, cp_decompose
from .errors import (
    ClassAbsent,
    EmptyStyleSet,
    FormatError,
    InvalidRank,
    ShapeMismatch,
)
from .tensorops import compute_stats

MIN_PIXELS = 16
FORMAT_VERSION = 1


def downsample_mask(mask: np.ndarray, divisor: int) -> np.ndarray:
    """Reduce a label mask to feature resolution by center sampling.

    Nearest-neighbor at the center of each divisor x divisor cell, so thin
    regions vanish the same way they vanish from pooled feature maps.
    """
    if divisor == 1:
        return mask
    h, w = mask.shape
    if h % divisor or w % divisor:
        raise ShapeMismatch(f"mask {h}x{w} is not divisible by {divisor}")
    return mask[divisor // 2 :: divisor, divisor // 2 :: divisor]


def rank_for(policy: str, channels: int, n_images: int, fixed_rank=None) -> int:
    """Resolve a rank policy to a concrete decomposition rank.

    'adaptive' ties the rank to the level's channel count, 'fixed' uses the
    given value, 'full' picks the smallest rank that can represent the
    stack exactly.
    """
    if policy == "adaptive":
        return channels
    if policy == "fixed":
        if fixed_rank is None or int(fixed_rank) < 1:
            raise InvalidRank(f"fixed rank policy needs a positive rank, got {fixed_rank}")
        return int(fixed_rank)
    if policy == "full":
        return min(n_images * channels, channels * channels)
    raise InvalidRank(f"unknown rank policy '{policy}'")


@dataclass(frozen=True)
class ModelEntry:
    """Factorized covariances and means of one (level, class) pair."""

    factors: CpFactors
    means: np.ndarray  # (n_participating, channels)
    image_indices: np.ndarray  # (n_participating,) indices into the style set
    rel_error: float
    n_iters: int

    def __post_init__(self):
        means = np.ascontiguousarray(self.means, dtype=np.float64)
        images = np.ascontiguousarray(self.image_indices, dtype=np.int64)
        if means.ndim != 2 or means.shape[0] != self.factors.n_styles:
            raise ShapeMismatch(
                f"means shape {means.shape} does not match {self.factors.n_styles} styles"
            )
        if means.shape[1] != self.factors.channels:
            raise ShapeMismatch("means and factors disagree on channel count")
        if images.shape != (self.factors.n_styles,):
            raise ShapeMismatch("image index list does not match factor count")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "image_indices", images)


@dataclass
class StyleModel:
    codec_name: str
    depth: int
    seed: int
    rank_policy: str
    rank: int | None
    min_pixels: int
    n_styles: int
    class_ids: tuple
    counts: np.ndarray  # (n_styles, n_classes) pixel counts at image resolution
    levels: dict  # level -> {class_id -> ModelEntry}
    class_names: dict = field(default_factory=dict)

    def classes_at(self, level: int):
        return sorted(self.levels.get(level, {}))

    def entry(self, level: int, class_id: int) -> ModelEntry:
        try:
            return self.levels[level][class_id]
        except KeyError:
            raise ClassAbsent(f"class {class_id} has no entry at level {level}")

    def has_entry(self, level: int, class_id: int) -> bool:
        return class_id in self.levels.get(level, {})

    def count_column(self, class_id: int) -> np.ndarray:
        try:
            j = self.class_ids.index(class_id)
        except ValueError:
            raise ClassAbsent(f"class {class_id} does not appear in the style set")
        return self.counts[:, j]


def by_count_weights(model: StyleModel, level: int, class_id: int) -> StyleWeights:
    """Default per-class blend weights: each participating style image
    weighted by how many pixels of the class it contributed."""
    entry = model.entry(level, class_id)
    col = model.count_column(class_id)[entry.image_indices].astype(np.float64)
    if col.sum() <= 0.0:
        # Participation implies pixels at feature resolution, so this would
        # take a malformed model; fall back to uniform rather than divide by 0.
        return StyleWeights.uniform(len(entry.image_indices))
    return StyleWeights.normalized(col)


def restrict_weights(weights: np.ndarray, entry: ModelEntry):
    """Project a length-n_styles weight vector onto an entry's participants.

    Returns (local weights, fallback) where fallback is True when the given
    vector puts no mass on any participating image and the caller should
    substitute the by-count default.
    """
    weights = np.asarray(weights, dtype=np.float64)
    local = weights[entry.image_indices]
    total = local.sum()
    if total <= 0.0:
        return None, True
    return StyleWeights.normalized(local), False


def build_style_model(
    images,
    masks,
    codec,
    depth: int = 4,
    seed: int = 0,
    rank_policy: str = "adaptive",
    rank=None,
    min_pixels: int = MIN_PIXELS,
    class_names=None,
    max_iters: int = 500,
    tol: float = 1e-8,
):
    """Fit a style model from images with aligned label masks.

    Returns (model, log) where log is a list of per-(level, class) fit
    records. Classes that never reach min_pixels at a level are left out of
    that level; the log marks them as skipped.
    """
    if len(images) == 0:
        raise EmptyStyleSet("a style model needs at least one style image")
    if len(masks) != len(images):
        raise ShapeMismatch(f"{len(images)} images but {len(masks)} masks")
    if not 1 <= depth <= 5:
        raise ShapeMismatch(f"depth must be in 1..5, got {depth}")

    from .codec import pad_to_multiple

    images = [np.asarray(im, dtype=np.float64) for im in images]
    masks = [np.asarray(mk) for mk in masks]
    for i, (im, mk) in enumerate(zip(images, masks)):
        if im.ndim != 3 or im.shape[2] != 3:
            raise ShapeMismatch(f"style image {i} has shape {im.shape}, expected H x W x 3")
        if mk.shape != im.shape[:2]:
            raise ShapeMismatch(
                f"mask {i} shape {mk.shape} does not match image {im.shape[:2]}"
            )
        if mk.min() < 0:
            raise ShapeMismatch(f"mask {i} contains negative class indices")

    class_ids = sorted({int(v) for mk in masks for v in np.unique(mk)})
    counts = np.zeros((len(images), len(class_ids)), dtype=np.int64)
    for i, mk in enumerate(masks):
        for j, cid in enumerate(class_ids):
            counts[i, j] = int((mk == cid).sum())

    top_div = codec.level_spec(depth).spatial_divisor
    padded_images = [pad_to_multiple(im, top_div) for im in images]
    padded_masks = [pad_to_multiple(mk.astype(np.int64), top_div) for mk in masks]

    levels = {}
    log = []
    for level in range(1, depth + 1):
        spec = codec.level_spec(level)
        feats = [codec.encode(im, level) for im in padded_images]
        grids = [downsample_mask(mk, spec.spatial_divisor).ravel() for mk in padded_masks]
        per_class = {}
        for cid in class_ids:
            selectors = [g == cid for g in grids]
            participating = [i for i, s in enumerate(selectors) if int(s.sum()) >= min_pixels]
            if not participating:
                log.append(
                    {"level": level, "class_id": cid, "skipped": True, "n_images": 0}
                )
                continue
            stats = [compute_stats(feats[i], selectors[i]) for i in participating]
            sigma = np.stack([s.cov for s in stats])
            means = np.stack([s.mean for s in stats])
            r = rank_for(rank_policy, spec.channels, len(participating), rank)
            result = cp_decompose(sigma, r, seed=seed, max_iters=max_iters, tol=tol)
            per_class[cid] = ModelEntry(
                factors=result.factors,
                means=means,
                image_indices=np.asarray(participating, dtype=np.int64),
                rel_error=result.rel_error,
                n_iters=result.n_iters,
            )
            log.append(
                {
                    "level": level,
                    "class_id": cid,
                    "skipped": False,
                    "n_images": len(participating),
                    "rank": r,
                    "rel_error": result.rel_error,
                    "n_iters": result.n_iters,
                }
            )
        levels[level] = per_class

    model = StyleModel(
        codec_name=codec.name,
        depth=depth,
        seed=seed,
        rank_policy=rank_policy,
        rank=None if rank is None else int(rank),
        min_pixels=min_pixels,
        n_styles=len(images),
        class_ids=tuple(class_ids),
        counts=counts,
        levels=levels,
        class_names=dict(class_names or {}),
    )
    return model, log


def save_model(path, model: StyleModel) -> None:
    meta = {
        "format": FORMAT_VERSION,
        "codec": model.codec_name,
        "depth": model.depth,
        "seed": model.seed,
        "rank_policy": model.rank_policy,
        "rank": model.rank,
        "min_pixels": model.min_pixels,
        "n_styles": model.n_styles,
        "class_ids": list(model.class_ids),
        "class_names": {str(k): v for k, v in model.class_names.items()},
    }
    entries = [("meta", json.dumps(meta, sort_keys=True).encode("utf-8"))]
    entries.append(("counts", model.counts))
    for level in sorted(model.levels):
        for cid in sorted(model.levels[level]):
            e = model.levels[level][cid]
            base = f"level{level}/class{cid}"
            entries.append((f"{base}/Z", e.factors.Z))
            entries.append((f"{base}/Y", e.factors.Y))
            entries.append((f"{base}/X", e.factors.X))
            entries.append((f"{base}/means", e.means))
            entries.append((f"{base}/images", e.image_indices))
            entries.append((f"{base}/fit", np.array([e.rel_error, float(e.n_iters)])))
    write_container(path, MODEL_MAGIC, entries)


def load_model(path) -> StyleModel:
    data, _ = read_container(path, MODEL_MAGIC)
    if "meta" not in data or "counts" not in data:
        raise FormatError("model file lacks 'meta' or 'counts' entries")
    try:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"model metadata is not valid JSON: {exc}")
    if meta.get("format") != FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {meta.get('format')}")

    levels = {}
    names = sorted(n for n in data if n.startswith("level"))
    seen = {tuple(n.split("/")[:2]) for n in names}
    for lv_tag, cl_tag in sorted(seen):
        level = int(lv_tag[len("level") :])
        cid = int(cl_tag[len("class") :])
        base = f"{lv_tag}/{cl_tag}"
        try:
            z, y, x = data[f"{base}/Z"], data[f"{base}/Y"], data[f"{base}/X"]
            means = data[f"{base}/means"]
            images = data[f"{base}/images"]
            fit = data[f"{base}/fit"]
        except KeyError as exc:
            raise FormatError(f"model entry '{base}' is incomplete: missing {exc}")
        entry = ModelEntry(
            factors=CpFactors(Z=z, Y=y, X=x),
            means=means,
            image_indices=images,
            rel_error=float(fit[0]),
            n_iters=int(fit[1]),
        )
        levels.setdefault(level, {})[cid] = entry

    return StyleModel(
        codec_name=meta["codec"],
        depth=int(meta["depth"]),
        seed=int(meta["seed"]),
        rank_policy=meta["rank_policy"],
        rank=meta["rank"],
        min_pixels=int(meta["min_pixels"]),
        n_styles=int(meta["n_styles"]),
        class_ids=tuple(int(c) for c in meta["class_ids"]),
        counts=np.ascontiguousarray(data["counts"], dtype=np.int64),
        levels=levels,
        class_names={int(k): v for k, v in meta.get("class_names", {}).items()},
    )
