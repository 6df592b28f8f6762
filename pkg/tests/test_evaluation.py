import numpy as np
import pytest

from slidedict.evaluation import (
    EvalReport,
    evaluate_offline,
    evaluate_online,
    merge_traces,
    read_trace,
    write_trace,
)
from slidedict.scoring import ScoreTrace, train_model
from slidedict.synth import SynthSpec, generate
from slidedict.windowing import WindowSpec


def test_report_metrics():
    r = EvalReport.from_predictions(("a", "b"), ["a", "a", "b", "b"], ["a", "b", "b", "b"])
    np.testing.assert_array_equal(r.confusion, [[1, 1], [0, 2]])
    assert r.accuracy == 0.75
    np.testing.assert_allclose(r.per_class_accuracy, [0.5, 1.0])
    assert "accuracy: 0.7500 (3/4)" in r.summary()


def test_trace_csv_round_trip(tmp_path):
    t = ScoreTrace(("a", "b"))
    t.append([0.1 + 1e-17, 0.9])
    t.append([1 / 3, 2 / 3])
    write_trace(t, tmp_path / "t.csv")
    rows = read_trace(tmp_path / "t.csv")
    assert [r["tau"] for r in rows] == [float(v) for v in t.as_array().ravel()]
    assert rows[-1]["cumulative"] == t.cumulative[1]


@pytest.mark.parametrize("body", ["", "a,b\n1,2\n", "step,class,tau,cumulative\n1,a,x,0\n",
                                  "step,class,tau,cumulative\n"])
def test_read_trace_rejects_bad_files(tmp_path, body):
    p = tmp_path / "t.csv"
    p.write_text(body)
    with pytest.raises(ValueError):
        read_trace(p)


def test_merge_picks_winner(tmp_path):
    t = ScoreTrace(("a", "b"))
    t.append([0.3, 0.7])
    write_trace(t, tmp_path / "x.csv")
    _, final = merge_traces([tmp_path / "x.csv"], tmp_path / "out")
    lines = final.read_text().splitlines()
    assert lines[1].endswith(",0") and lines[2].endswith(",1")


def test_workers_do_not_change_results(small_data, small_model):
    _, test = small_data
    r1, p1, t1 = evaluate_offline(small_model, test, workers=1)
    r2, p2, t2 = evaluate_offline(small_model, test, workers=2)
    assert p1 == p2
    for a, b in zip(t1, t2):
        np.testing.assert_array_equal(a.as_array(), b.as_array())


def test_constant_length_online_matches_offline():
    # with every sequence the same length the online window mapping lines up
    # with the offline segmentation, so full-stream accuracy should agree
    spec = SynthSpec(classes=3, frames_min=40, frames_max=40, noise_sigma=0.05, seed=21)
    _, seqs = generate(spec, 6, 2)
    train = [s for s in seqs if s.subject == 1]
    test = [s for s in seqs if s.subject == 2]
    model = train_model(train, WindowSpec(W=4, N=1, online_lengths=(16,)))
    off, _, _ = evaluate_offline(model, test)
    on, preds, traces = evaluate_online(model, test, fractions=(0.5, 1.0))
    assert on.curve[1.0] == off.accuracy
    assert preds.shape == (len(test), 2)
    assert all(t.steps_seen == 40 for t in traces)
