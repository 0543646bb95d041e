"""Label-derived matrices: class indicators, pairwise similarity and the class-block operator.

The class-block matrix ``A`` is block diagonal with one all-ones block per class.
Because an all-ones ``n x n`` block ``H`` satisfies ``H @ H = n * H``, its principal
square root is ``H / sqrt(n)``. Neither ``A`` nor its root is ever formed for
computation; both act on a matrix through per-class column sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: above this many samples the dense similarity matrix is not materialized
S_PRIME_CAP = 10_000


@dataclass(frozen=True, eq=False)
class SemanticContext:
    labels: np.ndarray
    block_sizes: np.ndarray
    U: np.ndarray
    S_prime: np.ndarray | None

    @property
    def n_samples(self) -> int:
        return self.labels.size

    @property
    def n_classes(self) -> int:
        return self.block_sizes.size

    @property
    def sqrt_scales(self) -> np.ndarray:
        """``1/sqrt(n_d)`` per class (0 for empty classes)."""
        n = self.block_sizes.astype(float)
        return np.where(n > 0, 1.0 / np.sqrt(np.maximum(n, 1.0)), 0.0)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)])


def build_semantic_context(labels, class_counts, s_prime_cap: int = S_PRIME_CAP) -> SemanticContext:
    labels = np.asarray(labels, dtype=np.intp)
    counts = np.asarray(class_counts, dtype=np.intp)
    if labels.ndim != 1:
        raise ValueError("labels must be a vector")
    if np.any(np.diff(labels) < 0):
        raise ValueError("dataset not class-ordered")
    if labels.size and (labels.min() < 0 or labels.max() >= counts.size):
        raise ValueError("label index out of range")
    if not np.array_equal(np.bincount(labels, minlength=counts.size), counts):
        raise ValueError("class_counts inconsistent with labels")
    n, c = labels.size, counts.size
    U = np.zeros((n, c))
    U[np.arange(n), labels] = 1.0
    S_prime = None
    if n <= s_prime_cap:
        S_prime = 2.0 * (U @ U.T) - 1.0
    for a in (labels, counts, U) + ((S_prime,) if S_prime is not None else ()):
        a.setflags(write=False)
    return SemanticContext(labels=labels, block_sizes=counts, U=U, S_prime=S_prime)


def _check_rows(M, ctx: SemanticContext) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim not in (1, 2) or M.shape[0] != ctx.n_samples:
        raise ValueError(f"dimension mismatch: operand has shape {M.shape}, expected {ctx.n_samples} rows")
    return M


def class_sums(M, ctx: SemanticContext) -> np.ndarray:
    """Per-class column sums, shape ``(c, k)``; equals ``U.T @ M``."""
    M = _check_rows(M, ctx)
    off = ctx.offsets
    out = np.zeros((ctx.n_classes,) + M.shape[1:])
    for d in range(ctx.n_classes):
        if off[d + 1] > off[d]:
            out[d] = M[off[d]:off[d + 1]].sum(axis=0)
    return out


def apply_A(M, ctx: SemanticContext) -> np.ndarray:
    """``A @ M``: every row of a class block becomes the block's column sum."""
    return class_sums(M, ctx)[ctx.labels]


def apply_A_sqrt(M, ctx: SemanticContext) -> np.ndarray:
    """``A^{1/2} @ M`` using the principal root; blockwise sum scaled by ``1/sqrt(n_d)``."""
    s = class_sums(M, ctx)
    scale = ctx.sqrt_scales.reshape((-1,) + (1,) * (s.ndim - 1))
    return (s * scale)[ctx.labels]


def apply_S_prime(M, ctx: SemanticContext) -> np.ndarray:
    """``S' @ M`` in factored form ``2 U (U^T M) - 1 (1^T M)``."""
    M = _check_rows(M, ctx)
    return 2.0 * class_sums(M, ctx)[ctx.labels] - M.sum(axis=0)


def materialize_A(ctx: SemanticContext) -> np.ndarray:
    return ctx.U @ ctx.U.T


def materialize_A_sqrt(ctx: SemanticContext) -> np.ndarray:
    return (ctx.U * ctx.sqrt_scales) @ ctx.U.T


def materialize_S_prime(ctx: SemanticContext) -> np.ndarray:
    if ctx.S_prime is not None:
        return ctx.S_prime
    return 2.0 * (ctx.U @ ctx.U.T) - 1.0


def sign(z) -> np.ndarray:
    """Elementwise sign into {-1, +1} with ``sign(0) = +1``."""
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, 1.0, -1.0)


def reconstruction_error(B_x, B_y, ctx: SemanticContext, L: float) -> float:
    """Squared Frobenius norm ``||B_x B_y^T - L S'||^2`` without forming any N x N matrix.

    Expands to ``tr(B_x^T B_x B_y^T B_y) - 2L tr(B_x^T S' B_y) + L^2 N^2``
    (every entry of ``S'`` is +-1).
    """
    B_x, B_y = (_check_rows(np.asarray(B, dtype=float).reshape(len(B), -1), ctx) for B in (B_x, B_y))
    if B_x.shape[1] != B_y.shape[1]:
        raise ValueError(f"dimension mismatch: {B_x.shape} vs {B_y.shape}")
    n = ctx.n_samples
    gram = np.sum((B_x.T @ B_x) * (B_y.T @ B_y))
    cross = 2.0 * np.sum(class_sums(B_x, ctx) * class_sums(B_y, ctx)) - B_x.sum(0) @ B_y.sum(0)
    return float(gram - 2.0 * L * cross + (L * n) ** 2)
