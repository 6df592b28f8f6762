"""Offline/online evaluation runs and their CSV reports."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .scoring import Model, ScoreTrace, classify_offline, decide, predictions_at_fractions
from .skeleton import ActionSequence, sequence_id

DEFAULT_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(1, 11))

_WORKER_MODEL: Model | None = None


def _init_worker(model: Model) -> None:
    global _WORKER_MODEL
    _WORKER_MODEL = model


def _call(job):
    fn, seq, extra = job
    return fn(_WORKER_MODEL, seq, *extra)


def map_sequences(fn: Callable, model: Model, seqs: Sequence[ActionSequence],
                  workers: int = 1, extra: tuple = ()) -> list:
    """``[fn(model, seq, *extra) for seq in seqs]``, optionally across processes.

    Results come back in input order whatever the worker count.
    """
    if workers <= 1 or len(seqs) <= 1:
        return [fn(model, s, *extra) for s in seqs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(model,)) as pool:
        return list(pool.map(_call, [(fn, s, extra) for s in seqs]))


@dataclass
class EvalReport:
    classes: tuple[str, ...]
    confusion: np.ndarray  # rows truth, columns prediction
    curve: dict[float, float] = field(default_factory=dict)

    @classmethod
    def from_predictions(cls, classes, truth: Sequence[str], predicted: Sequence[str]) -> "EvalReport":
        conf = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(truth, predicted):
            conf[classes.index(t), classes.index(p)] += 1
        return cls(tuple(classes), conf)

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else float("nan")

    @property
    def per_class_accuracy(self) -> np.ndarray:
        rows = self.confusion.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, np.diag(self.confusion) / np.maximum(rows, 1), np.nan)

    def summary(self) -> str:
        lines = [f"accuracy: {self.accuracy:.4f} ({np.trace(self.confusion)}/{self.confusion.sum()})"]
        for name, acc, n in zip(self.classes, self.per_class_accuracy, self.confusion.sum(axis=1)):
            lines.append(f"  {name}: {acc:.4f} (n={n})")
        for frac, acc in self.curve.items():
            lines.append(f"  online @ {frac:.0%} frames: {acc:.4f}")
        return "\n".join(lines)


# -- runs ----------------------------------------------------------------------


def _offline_job(model: Model, seq: ActionSequence):
    label, trace = classify_offline(seq, model)
    return label, trace


def _online_job(model: Model, seq: ActionSequence, fractions: tuple[float, ...]):
    return predictions_at_fractions(seq, model, fractions)


def evaluate_offline(model: Model, test: Sequence[ActionSequence], workers: int = 1):
    results = map_sequences(_offline_job, model, test, workers)
    predicted = [label for label, _ in results]
    report = EvalReport.from_predictions(model.classes, [s.label for s in test], predicted)
    return report, predicted, [t for _, t in results]


def evaluate_online(model: Model, test: Sequence[ActionSequence],
                    fractions: Sequence[float] = DEFAULT_FRACTIONS, workers: int = 1):
    """Replay every test sequence frame by frame.

    Returns the report (with its accuracy-vs-fraction curve, and a confusion
    matrix for the complete streams), the per-fraction predictions and the
    finished per-frame traces.
    """
    fractions = tuple(float(f) for f in fractions)
    results = map_sequences(_online_job, model, test, workers, extra=(fractions,))
    truth = [s.label for s in test]
    preds = np.array([p for p, _ in results], dtype=object).reshape(len(test), len(fractions))
    traces = [t for _, t in results]
    final = [model.classes[decide(t)[0]] for t in traces]
    report = EvalReport.from_predictions(model.classes, truth, final)
    for j, frac in enumerate(fractions):
        report.curve[frac] = float(np.mean([p == t for p, t in zip(preds[:, j], truth)]))
    return report, preds, traces


# -- CSV output ------------------------------------------------------------------


def write_trace(trace: ScoreTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["step", "class", "tau", "cumulative"])
        for step, (tau, cum) in enumerate(zip(trace.steps, trace.cumulative_steps), start=1):
            for name, t, c in zip(trace.classes, tau, cum):
                out.writerow([step, name, repr(float(t)), repr(float(c))])


def read_trace(path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["step", "class", "tau", "cumulative"]:
            raise ValueError(f"{path}: not a score trace (header {reader.fieldnames})")
        for i, row in enumerate(reader, start=2):
            try:
                rows.append({"step": int(row["step"]), "class": row["class"],
                             "tau": float(row["tau"]), "cumulative": float(row["cumulative"])})
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{i}: corrupt trace row") from None
    if not rows:
        raise ValueError(f"{path}: empty trace")
    return rows


def write_confusion(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["truth"] + list(report.classes))
        for name, row in zip(report.classes, report.confusion):
            out.writerow([name] + [int(v) for v in row])


def write_per_class(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["class", "n", "correct", "accuracy"])
        for i, name in enumerate(report.classes):
            n = int(report.confusion[i].sum())
            out.writerow([name, n, int(report.confusion[i, i]), f"{report.per_class_accuracy[i]:.6f}"])


def write_predictions(test: Sequence[ActionSequence], predicted, path, columns=("predicted",)) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["sequence", "subject", "truth", *columns])
        for seq, pred in zip(test, predicted):
            pred = list(pred) if isinstance(pred, (list, tuple, np.ndarray)) else [pred]
            out.writerow([sequence_id(seq), seq.subject, seq.label, *pred])


def write_curve(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["fraction", "accuracy"])
        for frac, acc in report.curve.items():
            out.writerow([f"{frac:g}", f"{acc:.6f}"])


def merge_traces(paths: Sequence, out_dir) -> tuple[Path, Path]:
    """Merge trace CSVs into tidy ``score_evolution.csv`` and ``final_scores.csv``."""
    if not paths:
        raise ValueError("no trace files to report on")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evolution = out_dir / "score_evolution.csv"
    final = out_dir / "final_scores.csv"
    with open(evolution, "w", newline="", encoding="utf-8") as fe, \
            open(final, "w", newline="", encoding="utf-8") as ff:
        ev, fi = csv.writer(fe), csv.writer(ff)
        ev.writerow(["trace", "step", "class", "tau", "cumulative"])
        fi.writerow(["trace", "steps", "class", "cumulative", "predicted"])
        for path in sorted(Path(p) for p in paths):
            rows = read_trace(path)
            last: dict[str, float] = {}
            for r in rows:
                ev.writerow([path.stem, r["step"], r["class"], repr(r["tau"]), repr(r["cumulative"])])
                last[r["class"]] = r["cumulative"]
            best = max(last, key=lambda c: (last[c], -list(last).index(c)))
            steps = max(r["step"] for r in rows)
            for name, cum in last.items():
                fi.writerow([path.stem, steps, name, repr(cum), int(name == best)])
    return evolution, final
