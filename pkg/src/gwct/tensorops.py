"""Dense linear-algebra kernel: covariance statistics, symmetric
eigendecomposition, whitening, coloring, and feature blending.

Feature maps are C x (H*W) matrices; all operations here are pure
functions on immutable inputs and are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion, InvalidAlpha, InvalidMatrix, ShapeMismatch

# Relative eigenvalue floor applied before the -1/2 power in whitening.
DEFAULT_EPS = 1e-5


@dataclass(frozen=True)
class FeatureMap:
    """A C x (H*W) feature matrix with its spatial dimensions retained.

    Columns are pixels of the feature grid in row-major order.
    """

    data: np.ndarray
    height: int
    width: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        if data.ndim != 2:
            raise ShapeMismatch(f"feature data must be 2-D, got {data.ndim}-D")
        if data.shape[1] != self.height * self.width:
            raise ShapeMismatch(
                f"feature data has {data.shape[1]} columns, expected "
                f"{self.height}x{self.width}={self.height * self.width}"
            )
        if not np.isfinite(data).all():
            raise InvalidMatrix("feature map contains non-finite entries")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class FeatureStats:
    """Per-region first and second moments of a feature map.

    ``cov`` uses the (count - 1) normalizer so statistics from
    differently sized masked regions stay comparable.
    """

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ShapeMismatch(
                f"cov shape {cov.shape} does not match mean length {mean.shape[0]}"
            )
        if self.count < 0:
            raise ShapeMismatch("count must be >= 0")
        scale = np.linalg.norm(cov)
        if scale > 0 and np.linalg.norm(cov - cov.T) > 1e-10 * scale:
            raise InvalidMatrix("covariance is not symmetric")

    @property
    def channels(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues (descending) and orthogonal eigenvectors of a symmetric matrix."""

    values: np.ndarray
    vectors: np.ndarray


def compute_stats(features: FeatureMap, mask: np.ndarray | None = None) -> FeatureStats:
    """Mean, covariance and pixel count of (optionally masked) feature columns.

    Parameters
    ----------
    features : FeatureMap
    mask : boolean column selector of length H*W, or None for all columns.

    Raises
    ------
    EmptyRegion
        If the mask selects zero columns.
    """
    data = features.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool).ravel()
        if mask.shape[0] != features.n_pixels:
            raise ShapeMismatch(
                f"mask length {mask.shape[0]} != {features.n_pixels} feature columns"
            )
        data = data[:, mask]
    count = data.shape[1]
    if count == 0:
        raise EmptyRegion("mask selected no feature columns")
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    cov = (centered @ centered.T) / max(count - 1, 1)
    cov = (cov + cov.T) / 2.0
    return FeatureStats(mean=mean, cov=cov, count=count)


def sym_eig(m: np.ndarray) -> EigenPair:
    """Eigendecomposition of a (symmetrized) square matrix, eigenvalues descending.

    The input is replaced by (M + M^T) / 2 before decomposition, so slightly
    asymmetric matrices (e.g. CP-reconstructed covariance slices) are accepted.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise InvalidMatrix("matrix contains non-finite entries")
    sym = (m + m.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    return EigenPair(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def whitening_operator(stats: FeatureStats, eps: float = DEFAULT_EPS) -> tuple[np.ndarray, int]:
    """E . clamp(D, floor)^(-1/2) . E^T for the stats covariance.

    The floor is ``eps`` relative to the largest eigenvalue (absolute ``eps``
    when the spectrum is entirely non-positive), which keeps rank-deficient
    regions finite. Returns the operator and the number of clamped eigenvalues.
    """
    if eps <= 0:
        raise InvalidMatrix("eps must be > 0")
    pair = sym_eig(stats.cov)
    d_max = max(float(pair.values[0]), 0.0)
    floor = eps * d_max if d_max > 0 else eps
    clamped = int(np.count_nonzero(pair.values < floor))
    d = np.maximum(pair.values, floor)
    op = (pair.vectors * d ** -0.5) @ pair.vectors.T
    return op, clamped


def coloring_operator(
    target: FeatureStats, eps: float = 0.0
) -> tuple[np.ndarray, np.ndarray, int]:
    """E . clamp(D, eps)^(1/2) . E^T and the mean for the target covariance.

    Negative eigenvalues (possible in low-rank CP reconstructions) are clamped
    to ``eps`` (default 0) before the square root. Returns the operator, the
    target mean, and the number of clamped eigenvalues.
    """
    pair = sym_eig(target.cov)
    floor = max(eps, 0.0)
    clamped = int(np.count_nonzero(pair.values < floor))
    d = np.maximum(pair.values, floor)
    op = (pair.vectors * np.sqrt(d)) @ pair.vectors.T
    return op, target.mean, clamped


def whiten(features: FeatureMap, stats: FeatureStats, eps: float = DEFAULT_EPS) -> FeatureMap:
    """Decorrelate features: E . clamp(D, eps)^(-1/2) . E^T . (features - mean)."""
    if stats.channels != features.channels:
        raise ShapeMismatch(
            f"stats over {stats.channels} channels, features have {features.channels}"
        )
    op, _ = whitening_operator(stats, eps)
    out = op @ (features.data - stats.mean[:, None])
    return FeatureMap(data=out, height=features.height, width=features.width)


def color(features: FeatureMap, target: FeatureStats, eps: float = 0.0) -> FeatureMap:
    """Recorrelate whitened features with the target covariance and add its mean."""
    if target.channels != features.channels:
        raise ShapeMismatch(
            f"target over {target.channels} channels, features have {features.channels}"
        )
    op, mean, _ = coloring_operator(target, eps)
    out = op @ features.data + mean[:, None]
    return FeatureMap(data=out, height=features.height, width=features.width)


def blend_features(
    content: FeatureMap, stylized: FeatureMap, alpha: float | np.ndarray
) -> FeatureMap:
    """alpha * stylized + (1 - alpha) * content, columnwise for vector alpha.

    ``alpha`` is a scalar in [0, 1] or a per-column vector of length H*W
    (per-class alpha support). The endpoints 0 and 1 return the respective
    input unchanged bitwise.
    """
    if content.data.shape != stylized.data.shape:
        raise ShapeMismatch(
            f"content {content.data.shape} vs stylized {stylized.data.shape}"
        )
    if np.isscalar(alpha):
        a = float(alpha)
        if not 0.0 <= a <= 1.0:
            raise InvalidAlpha(f"alpha {a} outside [0, 1]")
        if a == 0.0:
            out = content.data.copy()
        elif a == 1.0:
            out = stylized.data.copy()
        else:
            out = a * stylized.data + (1.0 - a) * content.data
    else:
        a = np.asarray(alpha, dtype=np.float64).ravel()
        if a.shape[0] != content.n_pixels:
            raise ShapeMismatch(
                f"alpha vector length {a.shape[0]} != {content.n_pixels} columns"
            )
        if a.min() < 0.0 or a.max() > 1.0:
            raise InvalidAlpha("alpha entries outside [0, 1]")
        out = a[None, :] * stylized.data + (1.0 - a)[None, :] * content.data
    return FeatureMap(data=out, height=content.height, width=content.width)
