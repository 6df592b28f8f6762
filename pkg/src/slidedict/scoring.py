"""Score fusion, cumulative decisions and the offline/online classifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .do3dj import DEFAULT_L, diff_probabilities, diff_scores
from .features import covariance_descriptor
from .skeleton import ActionSequence
from .sparse import (
    DEFAULT_EPS,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    Dictionary,
    build_dictionary,
    class_reconstruction_error,
    dict_probabilities,
    sliding_view,
    solve_lasso,
)
from .windowing import WindowSpec, centered_windows, progress_to_window, ready_at, segment


@dataclass(frozen=True)
class FusionWeights:
    mu1: float = 0.5
    mu2: float | None = None

    def __post_init__(self):
        mu1 = float(self.mu1)
        mu2 = 1.0 - mu1 if self.mu2 is None else float(self.mu2)
        if mu1 < 0 or mu2 < 0 or mu1 + mu2 <= 0:
            raise ValueError("fusion weights must be non-negative and not both zero")
        total = mu1 + mu2
        mu1 /= total
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", 1.0 - mu1)


def fuse(p_dict: np.ndarray, p_diff: np.ndarray, weights: FusionWeights = FusionWeights()) -> np.ndarray:
    p_dict = np.asarray(p_dict, dtype=np.float64)
    p_diff = np.asarray(p_diff, dtype=np.float64)
    if p_dict.shape != p_diff.shape:
        raise ValueError("probability vectors cover different class sets")
    return weights.mu1 * p_dict + weights.mu2 * p_diff


@dataclass
class ScoreTrace:
    """Fused per-step scores and their running per-class sums."""

    classes: tuple[str, ...]
    steps: list[np.ndarray] = field(default_factory=list)
    cumulative_steps: list[np.ndarray] = field(default_factory=list)

    def append(self, tau: np.ndarray) -> None:
        tau = np.asarray(tau, dtype=np.float64)
        if tau.shape != (len(self.classes),):
            raise ValueError("score vector does not match the class set")
        prev = self.cumulative_steps[-1] if self.cumulative_steps else np.zeros(len(self.classes))
        self.steps.append(tau)
        self.cumulative_steps.append(prev + tau)

    @property
    def steps_seen(self) -> int:
        return len(self.steps)

    @property
    def cumulative(self) -> np.ndarray:
        if not self.cumulative_steps:
            return np.zeros(len(self.classes))
        return self.cumulative_steps[-1]

    def as_array(self) -> np.ndarray:
        return np.array(self.steps).reshape(-1, len(self.classes))

    def truncated(self, n: int) -> "ScoreTrace":
        return ScoreTrace(self.classes, self.steps[:n], self.cumulative_steps[:n])

    def copy(self) -> "ScoreTrace":
        return self.truncated(self.steps_seen)


def decide(trace: ScoreTrace) -> tuple[int, np.ndarray]:
    """Winning class index and softmax confidence of the cumulative scores.

    Maximising the product of ``exp(tau)`` over steps is the same as
    maximising the sum of ``tau``, which is what is done here. Ties go to the
    lowest class index.
    """
    if trace.steps_seen == 0:
        raise ValueError("cannot decide on an empty score trace")
    total = trace.cumulative
    z = np.exp(total - total.max())
    return int(np.argmax(total)), z / z.sum()


# -- model ---------------------------------------------------------------------


@dataclass(eq=False)
class Model:
    dictionary: Dictionary
    train: tuple[ActionSequence, ...]
    spec: WindowSpec = WindowSpec()
    lam: float = DEFAULT_LAMBDA
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    eps: float = DEFAULT_EPS
    L: int = DEFAULT_L
    weights: FusionWeights = FusionWeights()

    def __post_init__(self):
        self.train = tuple(self.train)
        labels = self.dictionary.label_set
        self.train_by_class = [[s for s in self.train if s.label == c] for c in labels.classes]
        self.reference_length = float(np.median([s.n_frames for s in self.train]))

    @property
    def classes(self) -> tuple[str, ...]:
        return self.dictionary.label_set.classes

    @property
    def n_joints(self) -> int:
        return self.train[0].n_joints

    def window_probabilities(
        self, frames: np.ndarray, first_frame: np.ndarray, w: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Dictionary and joint-difference class probabilities for one window
        aligned to dictionary window ``w``."""
        desc = covariance_descriptor(frames)
        view = sliding_view(self.dictionary, w, self.spec.N)
        code = solve_lasso(desc, view, self.lam, self.max_iter, self.tol)
        p_dict = dict_probabilities(class_reconstruction_error(desc, view, code), self.eps)
        scores = diff_scores(frames, first_frame, self.train_by_class, w, self.spec.N,
                             self.spec.W, self.L)
        return p_dict, diff_probabilities(scores, self.eps)


def train_model(train: Sequence[ActionSequence], spec: WindowSpec = WindowSpec(), **params) -> Model:
    return Model(build_dictionary(train, spec), tuple(train), spec, **params)


def _check_joints(model: Model, n_joints: int) -> None:
    if n_joints != model.n_joints:
        raise ValueError(f"sequence has {n_joints} joints, model expects {model.n_joints}")


def classify_offline(test: ActionSequence, model: Model) -> tuple[str, ScoreTrace]:
    """Classify a complete sequence from its ``W`` windows."""
    _check_joints(model, test.n_joints)
    trace = ScoreTrace(model.classes)
    first = test.frames[0]
    for win in segment(test.n_frames, model.spec.W):
        p_dict, p_diff = model.window_probabilities(test.frames[win.as_slice()], first, win.index)
        trace.append(fuse(p_dict, p_diff, model.weights))
    best, _ = decide(trace)
    return model.classes[best], trace


def renormalized_max(probs: Iterable[np.ndarray]) -> np.ndarray:
    m = np.max(np.stack(list(probs)), axis=0)
    return m / m.sum()


class OnlineClassifier:
    """Frame-by-frame recogniser for a stream whose length is unknown.

    Frame ``t`` contributes one trace step once every centred window that can
    ever contain it as the middle frame has arrived (see ``ready_at``). Until
    the end-of-action signal (``finish``) later frames stay pending.
    """

    def __init__(self, model: Model):
        self.model = model
        self.frames: list[np.ndarray] = []
        self.trace = ScoreTrace(model.classes)
        self._cache: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}
        self.finished = False

    @property
    def n_available(self) -> int:
        return len(self.frames)

    def push(self, frame: np.ndarray, index: int | None = None) -> int:
        """Add one frame; returns the number of new trace steps.

        ``index``, when given, must be the next frame number in the stream.
        """
        if index is not None and index != self.n_available:
            raise ValueError(f"out-of-order frame {index}, expected {self.n_available}")
        return self.extend([frame])

    def extend(self, frames: Iterable[np.ndarray]) -> int:
        if self.finished:
            raise ValueError("stream already finished")
        for fr in frames:
            fr = np.array(fr, dtype=np.float64)
            if fr.ndim != 2 or fr.shape[1] != 3 or not np.all(np.isfinite(fr)):
                raise ValueError("frame must be a finite (J, 3) array")
            _check_joints(self.model, fr.shape[0])
            self.frames.append(fr)
        before = self.trace.steps_seen
        t = self.trace.steps_seen
        while t < self.n_available and ready_at(t, self.model.spec) <= self.n_available:
            self.trace.append(self._frame_score(t, ready_at(t, self.model.spec)))
            t += 1
        return self.trace.steps_seen - before

    def finish(self) -> ScoreTrace:
        """End of action: score every pending frame with the frames at hand."""
        if not self.finished:
            for t in range(self.trace.steps_seen, self.n_available):
                self.trace.append(self._frame_score(t, self.n_available))
            self.finished = True
        return self.trace

    def peek(self) -> ScoreTrace:
        """Trace as if the action ended now, without ending the stream."""
        trace = self.trace.copy()
        for t in range(trace.steps_seen, self.n_available):
            trace.append(self._frame_score(t, self.n_available))
        return trace

    def prediction(self, final: bool = True) -> str:
        trace = self.peek() if final and not self.finished else self.trace
        return self.model.classes[decide(trace)[0]]

    def _window(self, start: int, end: int, w: int) -> tuple[np.ndarray, np.ndarray]:
        key = (start, end, w)
        if key not in self._cache:
            frames = np.stack(self.frames[start:end])
            self._cache[key] = self.model.window_probabilities(frames, self.frames[0], w)
        return self._cache[key]

    def _frame_score(self, t: int, available: int) -> np.ndarray:
        model = self.model
        w = progress_to_window(t, model.reference_length, model.spec.W)
        pairs = [self._window(win.start, win.end, w)
                 for win in centered_windows(t, available, model.spec)]
        p_dict = renormalized_max(p for p, _ in pairs)
        p_diff = renormalized_max(q for _, q in pairs)
        return fuse(p_dict, p_diff, model.weights)


def classify_online(
    frames: Iterable[np.ndarray], model: Model, finish: bool = True
) -> tuple[str, ScoreTrace, list[str]]:
    """Replay ``frames`` one at a time.

    Returns the final label, the trace and the running prediction after each
    frame (pending frames not yet scored).
    """
    clf = OnlineClassifier(model)
    per_frame = []
    for fr in frames:
        clf.push(fr)
        per_frame.append(clf.prediction(final=False))
    if not per_frame:
        raise ValueError("empty stream")
    trace = clf.finish() if finish else clf.trace
    return model.classes[decide(trace)[0]], trace, per_frame


def predictions_at_fractions(
    seq: ActionSequence, model: Model, fractions: Sequence[float]
) -> tuple[list[str], ScoreTrace]:
    """Online predictions after ``ceil(p * F)`` frames of ``seq`` for each ``p``.

    Each prefix is judged as if the action ended there, so a fraction of 1.0
    gives the finished-stream prediction. Also returns the finished trace.
    """
    clf = OnlineClassifier(model)
    checkpoints = [max(1, min(seq.n_frames, math.ceil(p * seq.n_frames - 1e-9))) for p in fractions]
    out = {}
    for n in sorted(set(checkpoints)):
        clf.extend(seq.frames[clf.n_available:n])
        out[n] = clf.prediction(final=True)
    clf.extend(seq.frames[clf.n_available:])
    return [out[n] for n in checkpoints], clf.finish()
