import pytest
from hypothesis import given, strategies as st

from slidedict.windowing import (
    WindowSpec,
    centered_windows,
    progress_to_window,
    ready_at,
    segment,
    sliding_range,
)


def spans(windows):
    return [(w.start, w.end) for w in windows]


def test_segment_examples():
    # hand evaluation: len = 2 * ceil(30 / 5) = 12, starts round(18 * k / 3)
    assert spans(segment(30, 4)) == [(0, 12), (6, 18), (12, 24), (18, 30)]
    assert spans(segment(5, 1)) == [(0, 5)]
    assert spans(segment(3, 4)) == [(0, 3)] * 4


def test_segment_rejects_bad_sizes():
    with pytest.raises(ValueError):
        segment(0, 3)
    with pytest.raises(ValueError):
        segment(5, 0)


@given(st.integers(1, 400), st.integers(1, 20))
def test_segment_properties(F, W):
    wins = segment(F, W)
    assert len(wins) == W and [w.index for w in wins] == list(range(1, W + 1))
    assert wins[0].start == 0 and wins[-1].end == F
    assert all(0 <= w.start < w.end <= F for w in wins)
    assert all(a.start <= b.start for a, b in zip(wins, wins[1:]))
    covered = set()
    for w in wins:
        covered.update(range(w.start, w.end))
    assert covered == set(range(F))
    if W > 1 and F >= W:
        assert all(b.start < a.end for a, b in zip(wins, wins[1:]))
    assert segment(F, W) == wins


def test_sliding_range():
    assert list(sliding_range(3, 1, 5)) == [2, 3, 4]
    assert list(sliding_range(1, 2, 5)) == [1, 2, 3]
    assert list(sliding_range(5, 2, 5)) == [3, 4, 5]
    with pytest.raises(ValueError):
        sliding_range(6, 1, 5)


def test_centered_windows_examples():
    spec = WindowSpec(online_lengths=(8, 16))
    assert spans(centered_windows(10, 30, spec)) == [(6, 14), (2, 18)]
    assert spans(centered_windows(0, 1, WindowSpec(online_lengths=(8,)))) == [(0, 1)]
    assert spans(centered_windows(28, 30, spec)) == [(0, 30)]


@given(st.integers(0, 200), st.lists(st.integers(2, 40), min_size=1, max_size=5, unique=True))
def test_ready_at_fixes_the_window_set(t, lengths):
    spec = WindowSpec(online_lengths=tuple(sorted(lengths)))
    ready = ready_at(t, spec)
    assert ready > t
    at_ready = spans(centered_windows(t, ready, spec))
    # more frames never add centred windows once the frame is ready
    if any(t - n // 2 >= 0 for n in spec.online_lengths):
        assert spans(centered_windows(t, ready + 50, spec)) == at_ready
    assert ready_at(t + 1, spec) >= ready


def test_progress_to_window():
    assert progress_to_window(0, 30, 4) == 1
    assert progress_to_window(29, 30, 4) == 4
    assert progress_to_window(59, 30, 4) == 4


def test_window_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(online_lengths=(16, 8))
    with pytest.raises(ValueError):
        WindowSpec(online_lengths=(1, 8))
    with pytest.raises(ValueError):
        WindowSpec(W=0)
