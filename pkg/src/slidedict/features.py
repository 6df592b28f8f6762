"""Covariance-of-joints window descriptor."""

from __future__ import annotations

import numpy as np

ZERO_NORM = 1e-12


def frame_scatter(frame: np.ndarray) -> np.ndarray:
    """J x J scatter of one frame after removing the mean joint position."""
    frame = np.asarray(frame, dtype=np.float64)
    centered = frame - frame.mean(axis=0, keepdims=True)
    return centered @ centered.T


def window_covariance(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 3 or frames.shape[0] < 1:
        raise ValueError("a window needs at least one (J, 3) frame")
    centered = frames - frames.mean(axis=1, keepdims=True)
    return np.einsum("fjk,fik->ji", centered, centered) / frames.shape[0]


def upper_triangle(mat: np.ndarray) -> np.ndarray:
    """Row-major upper triangle of a square matrix, diagonal included."""
    rows, cols = np.triu_indices(mat.shape[0])
    return mat[rows, cols]


def covariance_descriptor(frames: np.ndarray) -> np.ndarray:
    """Unit-norm descriptor of length ``J * (J + 1) / 2`` for one window.

    ``frames`` is an ``(n, J, 3)`` array. The per-frame scatter matrices are
    averaged over the window, the upper triangle is vectorised and the result
    is scaled to unit L2 norm. A window whose joints all coincide gives the
    zero vector.
    """
    vec = upper_triangle(window_covariance(frames))
    norm = np.linalg.norm(vec)
    if norm < ZERO_NORM:
        return np.zeros_like(vec)
    return vec / norm


def descriptor_dim(n_joints: int) -> int:
    return n_joints * (n_joints + 1) // 2
