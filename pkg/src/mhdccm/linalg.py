"""Centering, A-weighted correlation matrices and the two-block generalized eigenproblem.

The pencil::

    [ 0     R_xy ] [w_x]         [ R_xx + r_x I        0      ] [w_x]
    [ R_xy^T  0  ] [w_y]  = lam  [      0        R_yy + r_y I ] [w_y]

is solved by whitening both diagonal blocks and taking the SVD of
``K = (R_xx + r_x I)^{-1/2} R_xy (R_yy + r_y I)^{-1/2}``. The singular values are
the non-negative half of the pencil's symmetric +-lam spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .semantics import SemanticContext, apply_A, apply_A_sqrt, apply_S_prime

#: relative ridge used when none is given: r = DEFAULT_RIDGE * trace(R) / dim
DEFAULT_RIDGE = 1e-6


class GevError(np.linalg.LinAlgError):
    """The pencil cannot be whitened (indefinite or singular after ridge)."""


@dataclass(frozen=True, eq=False)
class CenteredPair:
    x_prime: np.ndarray
    y_prime: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray


def center(x, y, x_mean=None, y_mean=None) -> CenteredPair:
    """Subtract column means (the training means when given) from both modalities."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: x {x.shape}, y {y.shape}")
    if x_mean is None and x.shape[0] < 2:
        raise ValueError("need at least 2 samples to center")
    xm = x.mean(axis=0) if x_mean is None else np.asarray(x_mean, dtype=float)
    ym = y.mean(axis=0) if y_mean is None else np.asarray(y_mean, dtype=float)
    return CenteredPair(x - xm, y - ym, xm, ym)


def discriminative_correlation(x_prime, y_prime, ctx: SemanticContext) -> np.ndarray:
    """Within-class minus between-class correlation, ``x'^T A y' - (-x'^T A y')``."""
    within = np.asarray(x_prime, dtype=float).T @ apply_A(y_prime, ctx)
    between = -within
    return within - between


@dataclass(frozen=True, eq=False)
class GevProblem:
    R_xy: np.ndarray
    R_xx: np.ndarray
    R_yy: np.ndarray
    ridge_x: float = 0.0
    ridge_y: float = 0.0

    def __post_init__(self):
        m, p = self.R_xy.shape
        if self.R_xx.shape != (m, m) or self.R_yy.shape != (p, p):
            raise ValueError(
                f"dimension mismatch: R_xy {self.R_xy.shape}, R_xx {self.R_xx.shape}, R_yy {self.R_yy.shape}"
            )
        if self.ridge_x < 0 or self.ridge_y < 0:
            raise ValueError("ridge must be non-negative")
        for R in (self.R_xx, self.R_yy):
            scale = max(np.abs(R).max(), np.finfo(float).tiny)
            if np.abs(R - R.T).max() > 1e-12 * scale:
                raise ValueError("R_xx and R_yy must be symmetric")

    @property
    def regularized(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.R_xx + self.ridge_x * np.eye(len(self.R_xx)),
                self.R_yy + self.ridge_y * np.eye(len(self.R_yy)))


@dataclass(frozen=True, eq=False)
class GevSolution:
    W_x: np.ndarray
    W_y: np.ndarray
    eigenvalues: np.ndarray


def default_ridge(R: np.ndarray, rel: float = DEFAULT_RIDGE) -> float:
    return rel * float(np.trace(R)) / len(R)


def resolve_ridge(ridge, R_xx, R_yy) -> tuple[float, float]:
    """``None`` -> relative default per modality; a number -> absolute ridge for both."""
    if ridge is None:
        return default_ridge(R_xx), default_ridge(R_yy)
    if np.ndim(ridge) == 0:
        return float(ridge), float(ridge)
    rx, ry = ridge
    return float(rx), float(ry)


def build_gev(cp: CenteredPair, ctx: SemanticContext,
              coupling: Callable[[np.ndarray], np.ndarray] | None = None,
              ridge=None) -> GevProblem:
    """Assemble ``R_xx = x'^T A x'``, ``R_yy = y'^T A y'`` and ``R_xy``.

    ``coupling`` maps an ``N x k`` matrix ``M`` to ``C @ M`` for the N x N coupling
    matrix ``C``; by default ``C = S'``. ``R_xy = (A^{1/2} x')^T C (A^{1/2} y')``.
    """
    xp, yp = cp.x_prime, cp.y_prime
    if xp.shape[0] != ctx.n_samples or yp.shape[0] != ctx.n_samples:
        raise ValueError(
            f"dimension mismatch: {xp.shape[0]}/{yp.shape[0]} rows vs {ctx.n_samples} labels"
        )
    R_xx = xp.T @ apply_A(xp, ctx)
    R_yy = yp.T @ apply_A(yp, ctx)
    # symmetrize away round-off so the whitening eigensolver sees an exact symmetric input
    R_xx = 0.5 * (R_xx + R_xx.T)
    R_yy = 0.5 * (R_yy + R_yy.T)
    ax = apply_A_sqrt(xp, ctx)
    ay = apply_A_sqrt(yp, ctx)
    Cay = apply_S_prime(ay, ctx) if coupling is None else np.asarray(coupling(ay), dtype=float)
    if Cay.shape != ay.shape:
        raise ValueError(f"dimension mismatch: coupling returned {Cay.shape}, expected {ay.shape}")
    R_xy = ax.T @ Cay
    rx, ry = resolve_ridge(ridge, R_xx, R_yy)
    return GevProblem(R_xy=R_xy, R_xx=R_xx, R_yy=R_yy, ridge_x=rx, ridge_y=ry)


def inv_sqrt(R: np.ndarray, ridge: float, name: str = "R") -> np.ndarray:
    """``(R + ridge I)^{-1/2}`` through a symmetric eigendecomposition."""
    evals, V = np.linalg.eigh(R)
    top = max(np.abs(evals).max(initial=0.0), ridge, np.finfo(float).tiny)
    tol = 10 * len(R) * np.finfo(float).eps * top
    if evals.min(initial=0.0) < -tol:
        raise GevError(
            f"{name} is indefinite (smallest eigenvalue {evals.min():.3g}); increase the ridge"
        )
    # round-off negatives are clipped so the floor is the ridge itself
    shifted = np.clip(evals, 0.0, None) + ridge
    if shifted.min() <= tol:
        raise GevError(
            f"{name} + ridge*I is singular (ridge={ridge:g}); pass a larger ridge"
        )
    return (V / np.sqrt(shifted)) @ V.T


def fix_signs(W_x: np.ndarray, W_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip column pairs so that the first non-negligible entry of each ``W_x`` column is positive."""
    W_x, W_y = W_x.copy(), W_y.copy()
    for j in range(W_x.shape[1]):
        col = W_x[:, j]
        big = np.abs(col) > 1e-12 * np.abs(col).max(initial=0.0)
        if big.any() and col[np.argmax(big)] < 0:
            W_x[:, j] *= -1
            W_y[:, j] *= -1
    return W_x, W_y


def solve_gev(prob: GevProblem, L: int, scale: float = 1.0) -> GevSolution:
    """Top-``L`` eigenpairs of the two-block pencil.

    Each returned column pair satisfies ``w_x^T (R_xx + r_x I) w_x = scale`` (likewise
    for ``y``); columns are mutually conjugate under the same metric.
    """
    m, p = prob.R_xy.shape
    if not 1 <= L <= min(m, p):
        raise ValueError(f"L={L} must lie in [1, min(m, p) = {min(m, p)}]")
    Kx = inv_sqrt(prob.R_xx, prob.ridge_x, "R_xx")
    Ky = inv_sqrt(prob.R_yy, prob.ridge_y, "R_yy")
    u, s, vt = np.linalg.svd(Kx @ prob.R_xy @ Ky)
    root = np.sqrt(scale)
    W_x = Kx @ u[:, :L] * root
    W_y = Ky @ vt[:L].T * root
    W_x, W_y = fix_signs(W_x, W_y)
    return GevSolution(W_x=W_x, W_y=W_y, eigenvalues=s[:L].copy())
