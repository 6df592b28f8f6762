import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slidedict.scoring import (
    FusionWeights,
    OnlineClassifier,
    ScoreTrace,
    classify_offline,
    classify_online,
    decide,
    fuse,
    predictions_at_fractions,
    renormalized_max,
)
from slidedict.windowing import ready_at


def test_fusion_weights():
    w = FusionWeights(0.3)
    assert (w.mu1, w.mu2) == pytest.approx((0.3, 0.7))
    w = FusionWeights(2.0, 2.0)
    assert (w.mu1, w.mu2) == (0.5, 0.5)
    with pytest.raises(ValueError):
        FusionWeights(-0.1)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=6), st.floats(0, 1))
def test_fuse_keeps_distributions(raw, mu1):
    p = np.array(raw) + 1e-3
    p /= p.sum()
    q = p[::-1].copy()
    tau = fuse(p, q, FusionWeights(mu1))
    assert tau.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(tau >= 0)


def test_decide_examples():
    t = ScoreTrace(("a", "b", "c"))
    t.append([0.2, 0.5, 0.3])
    t.append([0.6, 0.1, 0.3])
    idx, conf = decide(t)
    assert idx == 0  # sums 0.8, 0.6, 0.6
    assert conf.sum() == pytest.approx(1.0)
    tie = ScoreTrace(("a", "b"))
    tie.append([0.5, 0.5])
    assert decide(tie)[0] == 0
    with pytest.raises(ValueError):
        decide(ScoreTrace(("a",)))


def test_trace_rejects_wrong_width():
    with pytest.raises(ValueError):
        ScoreTrace(("a", "b")).append([1.0])


def test_renormalized_max():
    out = renormalized_max([np.array([0.6, 0.4]), np.array([0.2, 0.8])])
    np.testing.assert_allclose(out, [0.6 / 1.4, 0.8 / 1.4])


def test_offline_classification(small_data, small_model):
    _, test = small_data
    correct = 0
    for seq in test:
        label, trace = classify_offline(seq, small_model)
        assert trace.steps_seen == small_model.spec.W
        correct += label == seq.label
    assert correct >= len(test) - 1


def test_offline_joint_mismatch(small_model):
    from slidedict.skeleton import ActionSequence
    with pytest.raises(ValueError, match="joints"):
        classify_offline(ActionSequence(np.zeros((10, 5, 3))), small_model)


def test_online_steps_follow_ready_times(small_data, small_model):
    seq = small_data[1][0]
    clf = OnlineClassifier(small_model)
    for t, frame in enumerate(seq.frames):
        clf.push(frame, index=t)
        assert clf.trace.steps_seen <= t + 1
    pending = seq.n_frames - clf.trace.steps_seen
    assert pending == sum(ready_at(t, small_model.spec) > seq.n_frames for t in range(seq.n_frames))
    assert pending > 0
    peeked = clf.peek()
    assert peeked.steps_seen == seq.n_frames and clf.trace.steps_seen < seq.n_frames
    final = clf.finish()
    np.testing.assert_array_equal(final.as_array(), peeked.as_array())
    with pytest.raises(ValueError):
        clf.push(seq.frames[0])


def test_online_input_checks(small_model):
    clf = OnlineClassifier(small_model)
    with pytest.raises(ValueError, match="out-of-order"):
        clf.push(np.zeros((20, 3)), index=3)
    with pytest.raises(ValueError):
        clf.push(np.full((20, 3), np.nan))
    with pytest.raises(ValueError, match="joints"):
        clf.push(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        classify_online([], small_model)


def test_online_steps_are_distributions(small_data, small_model):
    seq = small_data[1][1]
    label, trace, per_frame = classify_online(seq.frames, small_model)
    assert len(per_frame) == seq.n_frames and trace.steps_seen == seq.n_frames
    np.testing.assert_allclose(trace.as_array().sum(axis=1), 1.0, atol=1e-12)
    assert label in small_model.classes


def test_predictions_at_fractions(small_data, small_model):
    seq = small_data[1][2]
    preds, trace = predictions_at_fractions(seq, small_model, [0.1, 0.5, 1.0])
    _, full, _ = classify_online(seq.frames, small_model)
    np.testing.assert_array_equal(trace.as_array(), full.as_array())
    assert preds[-1] == small_model.classes[decide(full)[0]]
    n = math.ceil(0.5 * seq.n_frames)
    clf = OnlineClassifier(small_model)
    clf.extend(seq.frames[:n])
    assert preds[1] == clf.prediction()
