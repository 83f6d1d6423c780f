"""CP (PARAFAC) decomposition of stacked style covariances and
reconstruction of single or weight-blended covariance slices.

A stack of N style covariances (N x C x C) is factored into
Z (N x R), Y (C x R), X (C x R) by alternating least squares, so that
slice i is approximated by Y . diag(Z[i]) . X^T. Blending N styles then
reduces to weighting the rows of Z, which makes inference cost
independent of the number of styles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRank, InvalidTensor, InvalidWeights, ShapeMismatch

DEFAULT_MAX_ITERS = 500
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CpFactors:
    """Factor matrices of a 3-way CP decomposition of an N x C x C stack."""

    Z: np.ndarray  # N x R, style mode
    Y: np.ndarray  # C x R, row mode
    X: np.ndarray  # C x R, column mode

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        X = np.asarray(self.X, dtype=np.float64)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        if Z.ndim != 2 or Y.ndim != 2 or X.ndim != 2:
            raise ShapeMismatch("factor matrices must be 2-D")
        if not (Z.shape[1] == Y.shape[1] == X.shape[1]):
            raise ShapeMismatch(
                f"factor column counts differ: {Z.shape[1]}, {Y.shape[1]}, {X.shape[1]}"
            )
        if Y.shape[0] != X.shape[0]:
            raise ShapeMismatch("Y and X must have the same number of rows")
        for name, m in (("Z", Z), ("Y", Y), ("X", X)):
            if not np.isfinite(m).all():
                raise InvalidTensor(f"factor {name} contains non-finite entries")

    @property
    def rank(self) -> int:
        return self.Z.shape[1]

    @property
    def n_styles(self) -> int:
        return self.Z.shape[0]

    @property
    def channels(self) -> int:
        return self.Y.shape[0]


@dataclass(frozen=True)
class StyleWeights:
    """Nonnegative, l1-normalized weight vector over the styles of a model."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).ravel()
        object.__setattr__(self, "w", w)
        if w.size == 0:
            raise InvalidWeights("weight vector is empty")
        if w.min() < 0:
            raise InvalidWeights("weights must be >= 0")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InvalidWeights(f"weights must sum to 1, got {w.sum()!r}")

    def __len__(self) -> int:
        return self.w.shape[0]

    @classmethod
    def normalized(cls, raw) -> "StyleWeights":
        raw = np.asarray(raw, dtype=np.float64).ravel()
        if raw.min() < 0:
            raise InvalidWeights("weights must be >= 0")
        total = raw.sum()
        if total <= 0:
            raise InvalidWeights("weights sum to zero")
        return cls(raw / total)

    @classmethod
    def uniform(cls, n: int) -> "StyleWeights":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def one_hot(cls, n: int, i: int) -> "StyleWeights":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)


@dataclass(frozen=True)
class CpResult:
    """Factors plus the fit trace of the ALS run that produced them."""

    factors: CpFactors
    rel_error: float
    n_iters: int
    error_history: list[float] = field(default_factory=list)


def _rel_error(stack: np.ndarray, Z, Y, X, norm_t: float) -> float:
    # Contract (Z, Y) first so no N*C*C*R intermediate is materialized.
    approx = np.einsum("ir,ar,br->iab", Z, Y, X, optimize=["einsum_path", (0, 1), (0, 1)])
    err = np.linalg.norm(stack - approx)
    return float(err / norm_t) if norm_t > 0 else float(err)


def cp_decompose(
    sigma_stack: np.ndarray,
    rank: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> CpResult:
    """Alternating-least-squares CP fit of an N x C x C covariance stack.

    Factor matrices are initialized from a seeded uniform distribution in
    [-1, 1]; the same (input, rank, seed) always yields bitwise-identical
    factors. Iteration stops after ``max_iters`` sweeps or when the relative
    fit changes by less than ``tol``.

    Returns
    -------
    CpResult
        Factors, final relative Frobenius error, iteration count, and the
        per-iteration error history.
    """
    stack = np.asarray(sigma_stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise InvalidTensor(f"expected an N x C x C stack, got shape {stack.shape}")
    if stack.shape[0] < 1:
        raise InvalidTensor("stack must contain at least one slice")
    if not np.isfinite(stack).all():
        raise InvalidTensor("stack contains non-finite entries")
    if not isinstance(rank, (int, np.integer)) or rank < 1:
        raise InvalidRank(f"rank must be a positive integer, got {rank!r}")

    n, c, _ = stack.shape
    rng = np.random.default_rng(seed)
    Z = rng.uniform(-1.0, 1.0, size=(n, rank))
    Y = rng.uniform(-1.0, 1.0, size=(c, rank))
    X = rng.uniform(-1.0, 1.0, size=(c, rank))

    norm_t = float(np.linalg.norm(stack))
    history: list[float] = []
    prev = np.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        # Mode updates solve the normal equations against the Hadamard
        # product of the other factors' Gram matrices.
        m = np.einsum("iab,ar,br->ir", stack, Y, X, optimize=True)
        Z = m @ np.linalg.pinv((Y.T @ Y) * (X.T @ X))
        m = np.einsum("iab,ir,br->ar", stack, Z, X, optimize=True)
        Y = m @ np.linalg.pinv((Z.T @ Z) * (X.T @ X))
        m = np.einsum("iab,ir,ar->br", stack, Z, Y, optimize=True)
        X = m @ np.linalg.pinv((Z.T @ Z) * (Y.T @ Y))

        err = _rel_error(stack, Z, Y, X, norm_t)
        history.append(err)
        if abs(prev - err) < tol:
            break
        prev = err

    factors = CpFactors(Z=Z, Y=Y, X=X)
    return CpResult(
        factors=factors, rel_error=history[-1], n_iters=iters, error_history=history
    )


def reconstruct_slice(factors: CpFactors, i: int) -> np.ndarray:
    """Frontal slice i of the decomposed stack: Y . diag(Z[i]) . X^T."""
    if not 0 <= i < factors.n_styles:
        raise IndexError(f"style index {i} out of range [0, {factors.n_styles})")
    return (factors.Y * factors.Z[i]) @ factors.X.T


def reconstruct_blend(factors: CpFactors, w: StyleWeights | np.ndarray) -> np.ndarray:
    """Weight-blended covariance: Y . diag(Z^T w) . X^T.

    Exactly equals the w-weighted sum of reconstructed slices (the blend is
    linear in Z), so a one-hot w recovers a single style's covariance.
    """
    if isinstance(w, StyleWeights):
        wv = w.w
    else:
        wv = np.asarray(w, dtype=np.float64).ravel()
        if wv.size and wv.min() < 0:
            raise InvalidWeights("weights must be >= 0")
    if wv.shape[0] != factors.n_styles:
        raise ShapeMismatch(
            f"weight length {wv.shape[0]} != {factors.n_styles} styles"
        )
    d = factors.Z.T @ wv
    return (factors.Y * d) @ factors.X.T


def blend_means(means: np.ndarray, w: StyleWeights | np.ndarray) -> np.ndarray:
    """Weighted average of per-style mean vectors (N x C) with the same weights
    used for covariance blending, so one-hot weights recover a single style's
    mean shift exactly."""
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2:
        raise ShapeMismatch(f"means must be N x C, got shape {means.shape}")
    wv = w.w if isinstance(w, StyleWeights) else np.asarray(w, dtype=np.float64).ravel()
    if wv.shape[0] != means.shape[0]:
        raise ShapeMismatch(f"weight length {wv.shape[0]} != {means.shape[0]} styles")
    return wv @ means
