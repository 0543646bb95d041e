import logging

import numpy as np
import pytest

from mhdccm.dataset import MultiModalDataset, from_arrays
from mhdccm.dccm import fit_dccm
from mhdccm.dnccm import dnccm_step, fit_dnccm, init_D0, iterate_dnccm, update_D
from mhdccm.linalg import GevProblem, build_gev, center
from mhdccm.semantics import apply_A_sqrt, build_semantic_context, materialize_A_sqrt, sign

from conftest import make_dataset


def parts(ds):
    cp = center(ds.x, ds.y)
    ctx = build_semantic_context(ds.labels, ds.class_counts)
    return cp, ctx


def dense_S(labels):
    return np.where(labels[:, None] == labels[None, :], 1.0, -1.0)


def test_D0_matches_dense_three_samples():
    ds = from_arrays([[1.0, 0.5], [2.0, -1.0], [4.0, 0.0]], [[3.0], [1.0], [0.5]], [0, 0, 1])
    cp, ctx = parts(ds)
    Ah = materialize_A_sqrt(ctx)
    dense = (Ah @ cp.x_prime).T @ dense_S(ds.labels) @ (Ah @ cp.y_prime)
    np.testing.assert_allclose(init_D0(cp, ctx), dense, atol=1e-12)


def test_D0_single_class_is_rank_one(rng):
    x = rng.normal(size=(5, 3))
    y = rng.normal(size=(5, 2))
    cp = center(x, y)
    ctx = build_semantic_context(np.zeros(5, int), [5])
    D = init_D0(cp, ctx)
    ax, ay = apply_A_sqrt(cp.x_prime, ctx), apply_A_sqrt(cp.y_prime, ctx)
    np.testing.assert_allclose(D, np.outer(ax.sum(0), ay.sum(0)), atol=1e-12)
    assert np.linalg.matrix_rank(D, tol=1e-10) <= 1


def test_D0_singleton_classes_drop_ones_term(rng):
    x = rng.normal(size=(4, 2))
    y = rng.normal(size=(4, 2))
    cp = center(x, y)
    ctx = build_semantic_context(np.arange(4), [1, 1, 1, 1])
    np.testing.assert_allclose(init_D0(cp, ctx), 2 * cp.x_prime.T @ cp.y_prime, atol=1e-12)


def test_first_step_is_collinear_with_dccm(rng):
    ds = make_dataset(rng, [7, 6, 8, 5], 4, 3)
    one = fit_dnccm(ds, Q=1)
    top = fit_dccm(ds, L=1)
    for a, b in ((one.W_x, top.W_x), (one.W_y, top.W_y)):
        cos = (a[:, 0] @ b[:, 0]) / np.linalg.norm(a) / np.linalg.norm(b)
        assert cos >= 1 - 1e-8


def test_scalar_step():
    ds = from_arrays([[0.0], [1.0], [3.0], [4.0]], [[2.0], [1.5], [0.0], [-1.0]], [0, 0, 1, 1])
    cp, ctx = parts(ds)
    prob = build_gev(cp, ctx, ridge=0.0)
    wx, wy, lam, degenerate = dnccm_step(init_D0(cp, ctx), prob)
    assert wx[0] == pytest.approx(1 / np.sqrt(prob.R_xx[0, 0]))
    assert abs(wy[0]) == pytest.approx(1 / np.sqrt(prob.R_yy[0, 0]))
    assert lam >= 0 and not degenerate
    D = init_D0(cp, ctx)
    assert 2 * wx @ D @ wy == pytest.approx(2 * lam)


def test_zero_D_is_degenerate(rng):
    prob = GevProblem(np.zeros((2, 3)), np.eye(2), np.eye(3))
    wx, wy, lam, degenerate = dnccm_step(np.zeros((2, 3)), prob)
    assert degenerate and lam == 0 and not wx.any() and not wy.any()


def test_update_with_zero_vectors_is_noop(rng):
    D = rng.normal(size=(2, 3))
    out = update_D(D, rng.normal(size=(5, 2)), rng.normal(size=(5, 3)), np.zeros(2), np.zeros(3))
    assert np.array_equal(out, D)


def test_update_with_all_positive_codes(rng):
    ax = np.abs(rng.normal(size=(6, 2)))
    ay = np.abs(rng.normal(size=(6, 2)))
    D = rng.normal(size=(2, 2))
    out = update_D(D, ax, ay, np.array([1.0, 1.0]), np.array([1.0, 0.5]))
    np.testing.assert_allclose(out, D - np.outer(ax.sum(0), ay.sum(0)), atol=1e-12)


def dense_D(ds, ws_x, ws_y, L):
    """Definition route: (A^{1/2}x')^T R_t (A^{1/2}y') with R_t = L S' - sum of code products."""
    cp, ctx = parts(ds)
    Ah = materialize_A_sqrt(ctx)
    ax, ay = Ah @ cp.x_prime, Ah @ cp.y_prime
    R = L * dense_S(ds.labels)
    for wx, wy in zip(ws_x, ws_y):
        R = R - np.outer(sign(ax @ wx), sign(ay @ wy))
    return ax.T @ R @ ay


def test_recurrence_matches_definition(rng):
    ds = make_dataset(rng, [3, 2, 3], 3, 3, shift=0.7)
    Q = 5
    for state in iterate_dnccm(ds, Q=Q):
        expected = dense_D(ds, state.w_x, state.w_y, Q)
        scale = max(1.0, np.abs(expected).max())
        np.testing.assert_allclose(state.D, expected, rtol=0, atol=1e-10 * scale)


def test_columns_unit_normalized_and_lambdas_nonnegative(rng):
    ds = make_dataset(rng, [6, 6, 6, 6], 3, 4)
    model = fit_dnccm(ds)
    assert model.L == 7
    cp, ctx = parts(ds)
    Rx, Ry = build_gev(cp, ctx).regularized
    for j in range(model.L):
        wx, wy = model.W_x[:, j], model.W_y[:, j]
        if not wx.any():
            continue
        assert wx @ Rx @ wx == pytest.approx(1.0, abs=1e-8)
        assert wy @ Ry @ wy == pytest.approx(1.0, abs=1e-8)
    assert np.all(model.eigenvalues >= 0)
    assert model.residual_trace.shape == (7,)


def test_residual_trace_matches_dense(rng):
    ds = make_dataset(rng, [4, 5, 3], 2, 3)
    model = fit_dnccm(ds, Q=3)
    cp, ctx = parts(ds)
    Ah = materialize_A_sqrt(ctx)
    bx = sign(Ah @ cp.x_prime @ model.W_x)
    by = sign(Ah @ cp.y_prime @ model.W_y)
    S = dense_S(ds.labels)
    for t in range(1, 4):
        expected = np.sum((bx[:, :t] @ by[:, :t].T - t * S) ** 2)
        assert model.residual_trace[t - 1] == pytest.approx(expected, rel=1e-12)


def test_deterministic_bytes(rng):
    ds = make_dataset(rng, [5, 6, 4], 3, 2)
    assert fit_dnccm(ds).to_bytes() == fit_dnccm(ds).to_bytes()


def test_warns_when_Q_exceeds_rank(rng, caplog):
    ds = make_dataset(rng, [5, 5], 2, 1)
    with caplog.at_level(logging.WARNING, logger="mhdccm.dnccm"):
        model = fit_dnccm(ds)
    assert model.L == 3
    assert "exceeds min(m, p)" in caplog.text


def test_two_feature_loop_count(rng):
    ds = make_dataset(rng, [5, 5, 5], 2, 2)
    model = fit_dnccm(ds, Q=2)
    assert model.W_x.shape == (2, 2) and model.W_y.shape == (2, 2)
