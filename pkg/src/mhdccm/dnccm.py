"""Non-canonical solver: one unit-normalized projection pair per iteration with sign-code deflation.

Iteration ``t`` maximizes ``w_x^T D_t w_y`` subject to ``w^T (R + r I) w = 1`` per modality,
where ``D_t = (A^{1/2} x')^T R_t (A^{1/2} y')`` and the residual target is::

    R_t = L S' - sum_{k <= t-1} sgn(A^{1/2} x' w_x^k) sgn(A^{1/2} y' w_y^k)^T

with ``L`` the total number of iterations. After each step ``D`` loses the rank-one
contribution of the step's sign codes, so no N x N matrix is ever formed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dataset import MultiModalDataset
from .dccm import _require_classes
from .linalg import CenteredPair, GevProblem, build_gev, center, solve_gev
from .model import ProjectionModel
from .semantics import (SemanticContext, apply_A_sqrt, build_semantic_context, class_sums,
                        reconstruction_error, sign)

log = logging.getLogger(__name__)


@dataclass
class DeflationState:
    t: int
    D: np.ndarray
    w_x: list = field(default_factory=list)
    w_y: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    centered: CenteredPair | None = None
    problem: GevProblem | None = None


def init_D0(cp: CenteredPair, ctx: SemanticContext) -> np.ndarray:
    """``(A^{1/2} x')^T S' (A^{1/2} y')`` via ``S' = 2 U U^T - 1 1^T``."""
    ax = apply_A_sqrt(cp.x_prime, ctx)
    ay = apply_A_sqrt(cp.y_prime, ctx)
    return 2.0 * class_sums(ax, ctx).T @ class_sums(ay, ctx) - np.outer(ax.sum(0), ay.sum(0))


def dnccm_step(D: np.ndarray, prob: GevProblem):
    """Top pair for the current objective matrix.

    Returns ``(w_x, w_y, lam, degenerate)``; an all-zero ``D`` yields zero vectors,
    ``lam = 0`` and ``degenerate = True``.
    """
    m, p = D.shape
    if not np.any(D):
        return np.zeros(m), np.zeros(p), 0.0, True
    step = GevProblem(R_xy=D, R_xx=prob.R_xx, R_yy=prob.R_yy,
                      ridge_x=prob.ridge_x, ridge_y=prob.ridge_y)
    sol = solve_gev(step, 1, scale=1.0)
    w_x, w_y = sol.W_x[:, 0], sol.W_y[:, 0]
    return w_x, w_y, float(w_x @ D @ w_y), False


def update_D(D: np.ndarray, ax: np.ndarray, ay: np.ndarray, w_x, w_y) -> np.ndarray:
    """Remove one step's sign-code contribution ``ax^T sgn(ax w_x) sgn(ay w_y)^T ay``.

    ``ax``/``ay`` are ``A^{1/2} x'`` and ``A^{1/2} y'``. Zero vectors (a degenerate step)
    leave ``D`` unchanged.
    """
    w_x = np.asarray(w_x, dtype=float)
    w_y = np.asarray(w_y, dtype=float)
    if not (np.any(w_x) or np.any(w_y)):
        return D.copy()
    return D - np.outer(ax.T @ sign(ax @ w_x), ay.T @ sign(ay @ w_y))


def iterate_dnccm(train: MultiModalDataset, Q: int | None = None,
                  ridge=None) -> Iterator[DeflationState]:
    """Yield the state after each completed iteration; ``state.D`` is already deflated."""
    _require_classes(train)
    m, p = train.x.shape[1], train.y.shape[1]
    Q = m + p if Q is None else int(Q)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if Q > min(m, p):
        log.warning("Q=%d exceeds min(m, p)=%d; later columns come from a rank-deficient "
                    "deflated problem", Q, min(m, p))
    cp = center(train.x, train.y)
    ctx = build_semantic_context(train.labels, train.class_counts)
    prob = build_gev(cp, ctx, ridge=ridge)
    ax = apply_A_sqrt(cp.x_prime, ctx)
    ay = apply_A_sqrt(cp.y_prime, ctx)
    state = DeflationState(t=0, D=Q * init_D0(cp, ctx), centered=cp, problem=prob)
    codes_x, codes_y = [], []
    for t in range(1, Q + 1):
        w_x, w_y, lam, degenerate = dnccm_step(state.D, prob)
        if degenerate:
            log.warning("iteration %d: objective matrix vanished, emitting zero column", t)
        state.D = update_D(state.D, ax, ay, w_x, w_y)
        state.t = t
        state.w_x.append(w_x)
        state.w_y.append(w_y)
        state.lambdas.append(lam)
        state.degenerate.append(degenerate)
        codes_x.append(sign(ax @ w_x))
        codes_y.append(sign(ay @ w_y))
        state.residual_trace.append(
            reconstruction_error(np.column_stack(codes_x), np.column_stack(codes_y), ctx, t))
        yield state


def fit_dnccm(train: MultiModalDataset, Q: int | None = None, ridge=None) -> ProjectionModel:
    """Run ``Q`` (default ``m + p``) deflation iterations and stack the per-step vectors as columns."""
    state = None
    for state in iterate_dnccm(train, Q, ridge):
        pass
    cp, prob = state.centered, state.problem
    return ProjectionModel(method="dnccm", W_x=np.column_stack(state.w_x),
                           W_y=np.column_stack(state.w_y), x_mean=cp.x_mean, y_mean=cp.y_mean,
                           eigenvalues=np.array(state.lambdas), n_classes=train.n_classes,
                           ridge_x=prob.ridge_x, ridge_y=prob.ridge_y, scale=1.0,
                           residual_trace=np.array(state.residual_trace))
