"""Canonical solver: closed-form projection pairs from a single generalized eigenproblem."""
from __future__ import annotations

import logging

import numpy as np

from .dataset import DatasetError, MultiModalDataset
from .linalg import build_gev, center, solve_gev
from .model import ProjectionModel
from .semantics import apply_A_sqrt, build_semantic_context, reconstruction_error, sign

log = logging.getLogger(__name__)


def default_code_length(m: int, p: int, n_classes: int) -> int:
    return max(1, min(m, p, n_classes - 1))


def _require_classes(train: MultiModalDataset):
    if train.n_present_classes < 2:
        raise DatasetError(
            f"degenerate class structure: training data has {train.n_present_classes} class(es), need >= 2"
        )


def fit_dccm(train: MultiModalDataset, L: int | None = None, ridge=None) -> ProjectionModel:
    """Fit ``L`` projection pairs under the canonical constraint.

    Each column pair is scaled so that ``W_x^T (R_xx + r_x I) W_x = N I_L`` (and likewise
    for ``y``), with ``R_xx = x'^T A x'``. ``ridge=None`` uses a small trace-relative ridge.
    """
    _require_classes(train)
    m, p = train.x.shape[1], train.y.shape[1]
    if L is None:
        L = default_code_length(m, p, train.n_present_classes)
    cp = center(train.x, train.y)
    ctx = build_semantic_context(train.labels, train.class_counts)
    prob = build_gev(cp, ctx, ridge=ridge)
    n = train.n_samples
    sol = solve_gev(prob, L, scale=float(n))
    lead = sol.eigenvalues[0] if sol.eigenvalues.size else 0.0
    weak = np.flatnonzero(sol.eigenvalues <= 1e-10 * max(lead, np.finfo(float).tiny))
    if weak.size:
        log.warning("columns %s have ~zero eigenvalue (rank of the coupling is at most %d); "
                    "their directions are not unique", weak.tolist(), train.n_present_classes)
    return ProjectionModel(method="dccm", W_x=sol.W_x, W_y=sol.W_y, x_mean=cp.x_mean,
                           y_mean=cp.y_mean, eigenvalues=sol.eigenvalues,
                           n_classes=train.n_classes, ridge_x=prob.ridge_x,
                           ridge_y=prob.ridge_y, scale=float(n))


def weighted_projections(model: ProjectionModel, ds: MultiModalDataset) -> tuple[np.ndarray, np.ndarray]:
    """``(A^{1/2} x' W_x, A^{1/2} y' W_y)`` on labelled data, centered with the model's means."""
    if ds.x.shape[1] != model.m or ds.y.shape[1] != model.p:
        raise ValueError(
            f"dimension mismatch: data ({ds.x.shape[1]}, {ds.y.shape[1]}) vs model ({model.m}, {model.p})"
        )
    cp = center(ds.x, ds.y, model.x_mean, model.y_mean)
    ctx = build_semantic_context(ds.labels, ds.class_counts)
    return apply_A_sqrt(cp.x_prime @ model.W_x, ctx), apply_A_sqrt(cp.y_prime @ model.W_y, ctx)


def objective_dccm(model: ProjectionModel, train: MultiModalDataset) -> float:
    """Signed hashing objective ``||sgn(P) sgn(Q)^T - L S'||^2`` (diagnostic, never optimized)."""
    P, Q = weighted_projections(model, train)
    ctx = build_semantic_context(train.labels, train.class_counts)
    return reconstruction_error(sign(P), sign(Q), ctx, model.L)
