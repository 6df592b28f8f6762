import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_descriptor
from slidedict.features import covariance_descriptor, descriptor_dim, frame_scatter


def test_frame_scatter_example():
    S = np.array([[1.0, 0, 0], [3.0, 0, 0]])
    np.testing.assert_array_equal(frame_scatter(S), [[1, -1], [-1, 1]])
    assert not frame_scatter(np.ones((4, 3))).any()


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_frame_scatter_is_psd(J, seed):
    S = np.random.default_rng(seed).normal(size=(J, 3))
    M = frame_scatter(S)
    np.testing.assert_allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_descriptor_example():
    frames = np.array([[[1.0, 0, 0], [3.0, 0, 0]]])
    np.testing.assert_allclose(covariance_descriptor(frames), np.array([1, -1, 1]) / np.sqrt(3), atol=1e-15)


def test_degenerate_window_is_zero():
    frames = np.tile(np.array([0.3, -1.0, 2.0]), (5, 4, 1))
    assert not covariance_descriptor(frames).any()


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        covariance_descriptor(np.zeros((0, 4, 3)))


windows = st.tuples(st.integers(1, 5), st.integers(2, 4), st.integers(0, 2**32 - 1)).map(
    lambda a: np.random.default_rng(a[2]).normal(size=(a[0], a[1], 3))
)


@settings(max_examples=100)
@given(windows)
def test_descriptor_matches_brute_force(frames):
    d = covariance_descriptor(frames)
    assert d.shape == (descriptor_dim(frames.shape[1]),)
    np.testing.assert_allclose(d, brute_descriptor(frames), rtol=0, atol=1e-12)
    assert abs(np.linalg.norm(d) - 1) <= 1e-9


@given(windows, st.tuples(*[st.floats(-100, 100)] * 3), st.floats(1e-3, 1e3))
def test_descriptor_invariances(frames, offset, scale):
    d = covariance_descriptor(frames)
    np.testing.assert_allclose(covariance_descriptor(frames + np.array(offset)), d, atol=1e-9)
    np.testing.assert_allclose(covariance_descriptor(frames * scale), d, atol=1e-9)
    perm = np.random.default_rng(0).permutation(len(frames))
    np.testing.assert_allclose(covariance_descriptor(frames[perm]), d, atol=1e-12)
