"""Difference-of-3D-joints score.

Test frames are compared against training frames after removing the offset
between the two sequences' first frames. For each class the ``L`` smallest
distances are averaged into a score, and scores become probabilities through
the same inverse normalisation used for reconstruction errors.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .skeleton import ActionSequence
from .sparse import DEFAULT_EPS, inverse_probabilities
from .windowing import segment, sliding_range

DEFAULT_L = 3


def baseline(test: ActionSequence | np.ndarray, train: ActionSequence | np.ndarray) -> np.ndarray:
    """Offset between the first test frame and the first training frame."""
    t0 = _first_frame(test)
    k0 = _first_frame(train)
    if t0.shape != k0.shape:
        raise ValueError(f"joint layout mismatch: {t0.shape} vs {k0.shape}")
    return t0 - k0


def _first_frame(seq) -> np.ndarray:
    frames = seq.frames if isinstance(seq, ActionSequence) else np.asarray(seq, dtype=np.float64)
    return frames[0]


def frame_pair_distance(test_frame: np.ndarray, train_frame: np.ndarray, beta: np.ndarray) -> float:
    """Frobenius norm of ``test_frame - train_frame - beta``."""
    gamma = np.asarray(test_frame) - np.asarray(train_frame) - np.asarray(beta)
    return float(np.sqrt(np.sum(gamma * gamma)))


def training_frames(seq: ActionSequence, w: int, N: int, W: int) -> np.ndarray:
    """Frame indices of ``seq`` covered by windows ``w-N .. w+N`` (each once)."""
    return _training_frames(seq.n_frames, w, N, W)


@lru_cache(maxsize=4096)
def _training_frames(F: int, w: int, N: int, W: int) -> np.ndarray:
    wins = segment(F, W)
    idx = set()
    for v in sliding_range(w, N, W):
        idx.update(range(wins[v - 1].start, wins[v - 1].end))
    out = np.fromiter(sorted(idx), dtype=np.int64)
    out.setflags(write=False)
    return out


def pooled_distances(
    test_window: np.ndarray,
    train_class: Sequence[ActionSequence],
    w: int,
    N: int,
    W: int,
    baselines: Sequence[np.ndarray],
) -> np.ndarray:
    """All calibrated test/train frame distances for one class, in a fixed order.

    Order is training sequence, then training frame, then test frame, which
    keeps any later stable sort deterministic.
    """
    test_window = np.asarray(test_window, dtype=np.float64)
    tw = test_window.reshape(len(test_window), -1)
    chunks = []
    for seq, beta in zip(train_class, baselines):
        frames = seq.frames[training_frames(seq, w, N, W)].reshape(-1, tw.shape[1])
        chunks.append(cdist(frames, tw - np.asarray(beta).ravel()).ravel())
    return np.concatenate(chunks) if chunks else np.empty(0)


def l_least_mean(pool: np.ndarray, L: int) -> float:
    if L < 1:
        raise ValueError("L must be >= 1")
    if len(pool) == 0:
        raise ValueError("no training frames fall inside the sliding range")
    k = min(L, len(pool))
    smallest = np.partition(pool, k - 1)[:k] if k < len(pool) else pool
    return float(np.sort(smallest).mean())


def class_diff_score(
    test_window: np.ndarray,
    train_class: Sequence[ActionSequence],
    w: int,
    N: int,
    W: int,
    baselines: Sequence[np.ndarray],
    L: int = DEFAULT_L,
) -> float:
    """Mean of the ``L`` smallest calibrated distances between the test window
    and the frames of windows ``w-N .. w+N`` of every training sequence of one
    class."""
    if not train_class:
        raise ValueError("class has no training sequences")
    pool = pooled_distances(test_window, train_class, w, N, W, baselines)
    return l_least_mean(pool, L)


def diff_scores(
    test_window: np.ndarray,
    first_test_frame: np.ndarray,
    train_by_class: Sequence[Sequence[ActionSequence]],
    w: int,
    N: int,
    W: int,
    L: int = DEFAULT_L,
) -> np.ndarray:
    """Per-class scores for one test window."""
    out = np.empty(len(train_by_class))
    for c, group in enumerate(train_by_class):
        betas = [first_test_frame - seq.frames[0] for seq in group]
        out[c] = class_diff_score(test_window, group, w, N, W, betas, L)
    return out


def diff_probabilities(scores: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    return inverse_probabilities(scores, eps)
