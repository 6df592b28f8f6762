"""Overlapping window segmentation and frame-centred windows for streaming."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_W = 8
DEFAULT_N = 2
DEFAULT_ONLINE_LENGTHS = (8, 16, 24, 32)


@dataclass(frozen=True)
class WindowSpec:
    W: int = DEFAULT_W
    N: int = DEFAULT_N
    online_lengths: tuple[int, ...] = DEFAULT_ONLINE_LENGTHS

    def __post_init__(self):
        lengths = tuple(int(x) for x in self.online_lengths)
        object.__setattr__(self, "online_lengths", lengths)
        if self.W < 1:
            raise ValueError("W must be >= 1")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if not lengths or min(lengths) < 2:
            raise ValueError("online_lengths must be non-empty with every length >= 2")
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ValueError("online_lengths must be strictly increasing")


@dataclass(frozen=True)
class Window:
    index: int  # 1-based
    start: int
    end: int  # exclusive

    @property
    def n_frames(self) -> int:
        return self.end - self.start

    def as_slice(self) -> slice:
        return slice(self.start, self.end)


def window_length(F: int, W: int) -> int:
    if F < W:
        # fewer frames than windows: every window spans the whole sequence
        return F
    return min(F, max(1, 2 * -(-F // (W + 1))))


def segment(F: int, W: int) -> list[Window]:
    """Split ``F`` frames into ``W`` evenly spaced windows of equal length.

    Windows are ``2 * ceil(F / (W + 1))`` frames long (about 50% overlap),
    the first starts at frame 0 and the last ends at frame ``F``. Starts are
    rounded half up.
    """
    if F < 1 or W < 1:
        raise ValueError(f"need F >= 1 and W >= 1, got F={F}, W={W}")
    length = window_length(F, W)
    if W == 1:
        return [Window(1, 0, length)]
    span = F - length
    den = W - 1
    windows = []
    for w in range(1, W + 1):
        start = (2 * span * (w - 1) + den) // (2 * den)
        windows.append(Window(w, start, start + length))
    return windows


def sliding_range(w: int, N: int, W: int) -> range:
    """Window indices within ``N`` of ``w``, clamped to ``[1, W]``."""
    if not 1 <= w <= W:
        raise ValueError(f"window index {w} outside [1, {W}]")
    return range(max(1, w - N), min(W, w + N) + 1)


def centered_windows(t: int, available: int, spec: WindowSpec) -> list[Window]:
    """Windows of each online length that have frame ``t`` as their middle.

    Only windows lying inside ``[0, available)`` are kept. When none fits, the
    whole available prefix is returned as a single window. Returned windows
    carry index 0 because they are not tied to an offline segmentation.
    """
    if not 0 <= t < available:
        raise ValueError(f"frame {t} outside the {available} available frames")
    out = []
    for length in spec.online_lengths:
        start, end = t - length // 2, t + (length + 1) // 2
        if start >= 0 and end <= available:
            out.append(Window(0, start, end))
    return out or [Window(0, 0, available)]


def ready_at(t: int, spec: WindowSpec) -> int:
    """Number of available frames at which frame ``t`` has its final window set.

    Lengths whose window would start before frame 0 can never fit, so only
    the others are waited for. A frame with no such length is ready at once.
    """
    fitting = [length for length in spec.online_lengths if t - length // 2 >= 0]
    if not fitting:
        return t + 1
    return t + (max(fitting) + 1) // 2


def progress_to_window(t: int, F_ref: float, W: int) -> int:
    """Map stream frame ``t`` to a dictionary window index by relative progress."""
    if t < 0 or F_ref <= 0 or W < 1:
        raise ValueError("need t >= 0, F_ref > 0, W >= 1")
    w = math.ceil((t + 1) / F_ref * W)
    return min(max(w, 1), W)
