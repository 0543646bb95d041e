import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhdccm.linalg import discriminative_correlation
from mhdccm.semantics import (apply_A, apply_A_sqrt, apply_S_prime, build_semantic_context,
                              materialize_A, materialize_A_sqrt, materialize_S_prime,
                              reconstruction_error, sign)

from conftest import random_partition


def dense_A(counts):
    # independent construction: explicit all-ones blocks on the diagonal
    n = int(np.sum(counts))
    A = np.zeros((n, n))
    start = 0
    for c in counts:
        A[start:start + c, start:start + c] = 1.0
        start += c
    return A


def test_two_singletons():
    ctx = build_semantic_context([0, 1], [1, 1])
    assert ctx.S_prime.tolist() == [[1, -1], [-1, 1]]
    assert np.array_equal(materialize_A(ctx), np.eye(2))
    assert np.array_equal(materialize_A_sqrt(ctx), np.eye(2))


def test_block_of_two_and_singleton():
    ctx = build_semantic_context([0, 0, 1], [2, 1])
    assert materialize_A(ctx).tolist() == [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
    root = materialize_A_sqrt(ctx)
    np.testing.assert_allclose(root[:2, :2], np.ones((2, 2)) / np.sqrt(2), rtol=0, atol=1e-15)
    np.testing.assert_allclose(root @ root, dense_A([2, 1]), rtol=0, atol=1e-10)


def test_single_class_all_similar():
    ctx = build_semantic_context([0, 0], [2])
    assert ctx.S_prime.tolist() == [[1, 1], [1, 1]]


def test_unordered_labels_rejected():
    with pytest.raises(ValueError, match="not class-ordered"):
        build_semantic_context([1, 0], [1, 1])


def test_apply_examples():
    ctx = build_semantic_context([0, 0], [2])
    M = np.array([[1.0], [3.0]])
    np.testing.assert_allclose(apply_A_sqrt(M, ctx), [[4 / np.sqrt(2)], [4 / np.sqrt(2)]], atol=1e-15)
    assert apply_A(M, ctx).tolist() == [[4.0], [4.0]]
    single = build_semantic_context([0, 1, 2], [1, 1, 1])
    M3 = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(apply_A(M3, single), M3)
    assert np.array_equal(apply_A_sqrt(M3, single), M3)
    assert not np.any(apply_A_sqrt(np.zeros((2, 3)), ctx))


def test_dimension_mismatch():
    ctx = build_semantic_context([0, 1], [1, 1])
    with pytest.raises(ValueError, match="dimension mismatch"):
        apply_A(np.ones((3, 1)), ctx)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_operators_match_dense(seed):
    rng = np.random.default_rng(seed)
    labels, counts = random_partition(rng)
    ctx = build_semantic_context(labels, counts)
    n = labels.size
    M = rng.normal(size=(n, 3))
    A = dense_A(counts)
    same = labels[:, None] == labels[None, :]
    S = np.where(same, 1.0, -1.0)
    np.testing.assert_allclose(apply_A(M, ctx), A @ M, atol=1e-12)
    np.testing.assert_allclose(apply_S_prime(M, ctx), S @ M, atol=1e-12)
    np.testing.assert_array_equal(materialize_S_prime(ctx), S)
    np.testing.assert_allclose(apply_A_sqrt(apply_A_sqrt(M, ctx), ctx), apply_A(M, ctx),
                               rtol=1e-10, atol=1e-10 * np.abs(M).max())
    # S' invariants
    assert np.array_equal(S, S.T) and np.trace(S) == n
    np.testing.assert_array_equal(ctx.S_prime, 2 * ctx.U @ ctx.U.T - 1)
    assert np.all(ctx.U.sum(axis=1) == 1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_A_spectrum(seed):
    rng = np.random.default_rng(seed)
    labels, counts = random_partition(rng)
    ctx = build_semantic_context(labels, counts)
    evals = np.sort(np.linalg.eigvalsh(materialize_A(ctx)))
    expected = np.sort(np.concatenate([counts, np.zeros(labels.size - counts.size)]))
    np.testing.assert_allclose(evals, expected, atol=1e-10)


def test_discriminative_correlation_identity(rng):
    labels, counts = np.repeat([0, 1, 2], [3, 4, 2]), [3, 4, 2]
    ctx = build_semantic_context(labels, counts)
    xp = rng.normal(size=(9, 3))
    yp = rng.normal(size=(9, 2))
    np.testing.assert_allclose(discriminative_correlation(xp, yp, ctx),
                               2 * xp.T @ dense_A(counts) @ yp, rtol=1e-12)


def test_sign_tie_rule():
    assert sign([0.5, -0.2, 0.0]).tolist() == [1, -1, 1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 4))
def test_reconstruction_error_matches_elementwise_sum(seed, L):
    rng = np.random.default_rng(seed)
    labels, counts = random_partition(rng, n_max=12)
    ctx = build_semantic_context(labels, counts)
    n = labels.size
    bx = rng.choice([-1.0, 1.0], size=(n, L))
    by = rng.choice([-1.0, 1.0], size=(n, L))
    S = np.where(labels[:, None] == labels[None, :], 1.0, -1.0)
    expected = sum((bx[i] @ by[j] - L * S[i, j]) ** 2 for i in range(n) for j in range(n))
    assert reconstruction_error(bx, by, ctx, L) == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_reconstruction_error_perfect_codes_is_zero():
    ctx = build_semantic_context([0, 0, 1, 1], [2, 2])
    b = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    assert reconstruction_error(b, b, ctx, 1) == 0.0


def test_no_dense_similarity_above_cap():
    ctx = build_semantic_context([0, 0, 1], [2, 1], s_prime_cap=2)
    assert ctx.S_prime is None
    assert materialize_S_prime(ctx).tolist() == [[1, 1, -1], [1, 1, -1], [-1, -1, 1]]
