import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankreg import geometry
from rankreg.errors import DegenerateSample
from rankreg.geometry import (CorrespondenceSet, SimilarityTransform, fit_similarity,
                              residual, rot_x, rot_z, rotation_error_deg)

from conftest import random_transform


def test_apply_identity():
    T = SimilarityTransform.identity()
    np.testing.assert_array_equal(geometry.apply(T, [1, 2, 3]), [1, 2, 3])


def test_apply_scale_and_shift():
    T = SimilarityTransform(2.0, np.eye(3), [1, 1, 1])
    np.testing.assert_array_equal(T.apply([1, 0, 0]), [3, 1, 1])


def test_apply_rotation():
    T = SimilarityTransform(1.0, rot_z(90), np.zeros(3))
    np.testing.assert_allclose(T.apply([1, 0, 0]), [0, 1, 0], atol=1e-15)


def test_transform_rejects_bad_inputs():
    with pytest.raises(ValueError):
        SimilarityTransform(0.0, np.eye(3), np.zeros(3))
    with pytest.raises(ValueError):
        SimilarityTransform(1.0, np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_correspondence_set_validation():
    with pytest.raises(ValueError):
        CorrespondenceSet(np.zeros((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        CorrespondenceSet(np.zeros((4, 3)), np.zeros((5, 3)))
    with pytest.raises(ValueError):
        CorrespondenceSet(np.full((3, 3), np.nan), np.zeros((3, 3)))


def test_fit_exact_triangle():
    a = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    T = fit_similarity(CorrespondenceSet(a, 2 * a + 1))
    assert T.s == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(T.R, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(T.t, [1, 1, 1], atol=1e-12)


def test_fit_identity_fixed_scale(rng):
    a = rng.random((3, 3))
    T = fit_similarity(CorrespondenceSet(a, a), fixed_scale=1.0)
    assert T.s == 1.0
    np.testing.assert_allclose(T.R, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(T.t, 0, atol=1e-12)


def test_fit_recovers_random_transform():
    rng = np.random.default_rng(7)
    R = geometry.random_rotation(rng)
    t = np.array([0.1, -0.2, 0.3])
    a = rng.random((10, 3))
    b = 3.0 * a @ R.T + t
    T = fit_similarity(CorrespondenceSet(a, b))
    assert np.abs(T.R - R).max() < 1e-9
    assert abs(T.s - 3.0) < 1e-9
    assert np.abs(T.t - t).max() < 1e-9


@pytest.mark.parametrize("a", [
    [[0, 0, 0], [1, 1, 1], [2, 2, 2]],
    [[1, 2, 3], [1, 2, 3], [1, 2, 3]],
    [[0, 0, 0], [0, 0, 0], [1, 0, 0]],
])
def test_fit_degenerate(a):
    a = np.array(a, dtype=float)
    with pytest.raises(DegenerateSample):
        fit_similarity(CorrespondenceSet(a, a + 1))


def test_fit_requires_three_indices(rng):
    corr = CorrespondenceSet(rng.random((5, 3)), rng.random((5, 3)))
    with pytest.raises(DegenerateSample):
        fit_similarity(corr, [0, 1])


def test_fit_sharp_triangle_not_rejected():
    a = np.array([[0, 0, 0], [1, 0, 0], [0.5, 1e-4, 0]])
    T = fit_similarity(CorrespondenceSet(a, 1.5 * a @ rot_x(30).T))
    assert rotation_error_deg(T.R, rot_x(30)) < 1e-6


def test_fit_minimal_batch_matches_single(rng):
    corr = CorrespondenceSet(rng.random((20, 3)), rng.random((20, 3)))
    tri = np.array([[0, 1, 2], [3, 7, 11], [5, 6, 19]])
    s, R, t, ok = geometry.fit_minimal_batch(corr, tri)
    assert ok.all()
    for m, idx in enumerate(tri):
        T = fit_similarity(corr, idx)
        np.testing.assert_allclose([s[m]], [T.s], rtol=1e-12)
        np.testing.assert_allclose(R[m], T.R, atol=1e-12)
        np.testing.assert_allclose(t[m], T.t, atol=1e-12)


def test_residual_examples():
    I = SimilarityTransform.identity()
    corr = CorrespondenceSet([[1, 1, 1], [0, 0, 0], [1, 0, 0]], [[1, 1, 1], [3, 4, 0], [2, 0, 0]])
    assert residual(I, corr, 0) == 0
    assert residual(I, corr, 1) == pytest.approx(5.0)
    assert residual(SimilarityTransform(2.0, np.eye(3), np.zeros(3)), corr, 2) == 0


def test_residual_reindex_invariant(rng):
    corr = CorrespondenceSet(rng.random((8, 3)), rng.random((8, 3)))
    T = random_transform(rng)
    perm = rng.permutation(8)
    shuffled = corr.subset(perm)
    for new, old in enumerate(perm):
        assert residual(T, shuffled, new) == residual(T, corr, old)
    np.testing.assert_array_equal(geometry.residuals(T, shuffled), geometry.residuals(T, corr)[perm])


def test_rotation_error_examples():
    assert rotation_error_deg(np.eye(3), np.eye(3)) == 0
    assert rotation_error_deg(rot_z(180), np.eye(3)) == pytest.approx(180.0, abs=1e-12)
    assert abs(rotation_error_deg(rot_x(10), np.eye(3)) - 10) < 1e-9


def test_rotation_error_resolves_tiny_angles():
    # arccos of the trace loses everything below ~1e-6 degrees.
    assert rotation_error_deg(rot_x(1e-9), np.eye(3)) == pytest.approx(1e-9, rel=1e-6)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_rotation_error_symmetric(seed):
    rng = np.random.default_rng(seed)
    A, B = geometry.random_rotation(rng), geometry.random_rotation(rng)
    assert rotation_error_deg(A, A) == pytest.approx(0.0, abs=1e-6)
    assert rotation_error_deg(A, B) == pytest.approx(rotation_error_deg(B, A), abs=1e-9)
    assert 0 <= rotation_error_deg(A, B) <= 180


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(3, 30))
def test_fit_noiseless_recovery(seed, n):
    rng = np.random.default_rng(seed)
    G = random_transform(rng)
    a = rng.random((n, 3))
    T = fit_similarity(CorrespondenceSet(a, G.apply(a)))
    assert np.abs(T.R - G.R).max() < 1e-9
    assert abs(T.s - G.s) < 1e-9
    assert np.abs(T.t - G.t).max() < 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_fit_fixed_scale_matches_free_fit(seed):
    rng = np.random.default_rng(seed)
    G = random_transform(rng)
    a = rng.random((6, 3))
    corr = CorrespondenceSet(a, G.apply(a))
    free = fit_similarity(corr)
    fixed = fit_similarity(corr, fixed_scale=G.s)
    assert np.abs(free.R - fixed.R).max() < 1e-9
    assert np.abs(free.t - fixed.t).max() < 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_fit_output_valid_on_noisy_near_degenerate(seed):
    rng = np.random.default_rng(seed)
    a = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float) + 1e-6 * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))
    try:
        T = fit_similarity(CorrespondenceSet(a, b))
    except DegenerateSample:
        return
    assert T.s > 0 and geometry.is_rotation(T.R)
