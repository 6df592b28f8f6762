"""Skeleton sequences: data model, file I/O, manifests and cross-subject splits.

A frame is a ``(J, 3)`` array of joint coordinates. A sequence stores its
frames as one ``(F, J, 3)`` float64 array that is made read-only on
construction, so sequences can be shared freely between readers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FORMATS = ("canonical-csv", "utk-text")


class SkeletonFormatError(ValueError):
    """Raised when a skeleton file or manifest cannot be parsed."""


@dataclass(frozen=True)
class ActionSequence:
    frames: np.ndarray
    label: str | None = None
    subject: int | None = None
    trial: int | None = None
    name: str = ""

    def __post_init__(self):
        arr = np.array(self.frames, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"frames must have shape (F, J, 3), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("a sequence needs at least one frame")
        if arr.shape[1] < 2:
            raise ValueError("a frame needs at least two joints")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite joint coordinate")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_joints(self) -> int:
        return self.frames.shape[1]

    def __len__(self):
        return self.n_frames

    def truncated(self, n: int) -> "ActionSequence":
        """Return the first ``n`` frames as a new sequence."""
        return ActionSequence(self.frames[:n], self.label, self.subject, self.trial, self.name)


@dataclass(frozen=True)
class LabelSet:
    classes: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("need at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")
        if len(self.counts) != len(self.classes) or min(self.counts) < 1:
            raise ValueError("every class needs at least one training sequence")

    @classmethod
    def from_sequences(cls, seqs: Iterable[ActionSequence]) -> "LabelSet":
        counts: dict[str, int] = {}
        for s in seqs:
            if s.label is None:
                raise ValueError(f"unlabeled training sequence {s.name!r}")
            counts[s.label] = counts.get(s.label, 0) + 1
        classes = tuple(sorted(counts))
        return cls(classes, tuple(counts[c] for c in classes))

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def index(self, label: str) -> int:
        return self.classes.index(label)


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str
    subject: int
    trial: int
    format: str = "canonical-csv"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    joint_count: int
    sample_rate: float | None = None
    excluded: list[ManifestEntry] = field(default_factory=list)

    @property
    def subjects(self) -> list[int]:
        return sorted({e.subject for e in self.entries})


# -- file I/O ----------------------------------------------------------------


def _finite_row(values: list[str], lineno: int, path) -> list[float]:
    try:
        row = [float(v) for v in values]
    except ValueError as exc:
        raise SkeletonFormatError(f"{path}:{lineno}: {exc}") from None
    if not all(np.isfinite(row)):
        raise SkeletonFormatError(f"{path}:{lineno}: non-finite coordinate")
    return row


def _read_canonical_csv(text: str, path) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header:
        raise SkeletonFormatError(f"{path}: empty file")
    header = [h.strip() for h in header]
    if header[0] != "frame" or (len(header) - 1) % 3 or len(header) < 7:
        raise SkeletonFormatError(f"{path}: bad header {header[:4]}...")
    n_joints = (len(header) - 1) // 3
    expected = ["frame"] + [f"{a}{j}" for j in range(n_joints) for a in "xyz"]
    if header != expected:
        raise SkeletonFormatError(f"{path}: header must be frame,x0,y0,z0,...")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not v.strip() for v in rec):
            continue
        if len(rec) != len(header):
            raise SkeletonFormatError(
                f"{path}:{lineno}: expected {len(header)} columns, got {len(rec)}"
            )
        rows.append(_finite_row(rec[1:], lineno, path))
    if not rows:
        raise SkeletonFormatError(f"{path}: no frames")
    return np.asarray(rows).reshape(len(rows), n_joints, 3)


def _read_utk_text(text: str, path, joint_count: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 1 + 3 * joint_count:
            raise SkeletonFormatError(
                f"{path}:{lineno}: expected frame id and {3 * joint_count} coordinates, "
                f"got {len(tokens) - 1}"
            )
        rows.append(_finite_row(tokens[1:], lineno, path))
    if not rows:
        raise SkeletonFormatError(f"{path}: empty file")
    return np.asarray(rows).reshape(len(rows), joint_count, 3)


def load_sequence(
    path,
    format: str = "canonical-csv",
    *,
    joint_count: int = 20,
    label: str | None = None,
    subject: int | None = None,
    trial: int | None = None,
) -> ActionSequence:
    """Read one skeleton sequence from ``path``.

    ``canonical-csv`` files carry a ``frame,x0,y0,z0,...`` header and one row
    per frame. ``utk-text`` files are whitespace-delimited rows holding a frame
    id followed by ``3 * joint_count`` coordinates in joint-major order.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    text = Path(path).read_text(encoding="utf-8")
    if format == "canonical-csv":
        frames = _read_canonical_csv(text, path)
    else:
        frames = _read_utk_text(text, path, joint_count)
    return ActionSequence(frames, label, subject, trial, name=Path(path).stem)


def write_sequence(seq: ActionSequence, path) -> None:
    """Write ``seq`` as canonical CSV with 9 significant digits per value."""
    n_joints = seq.n_joints
    header = ["frame"] + [f"{a}{j}" for j in range(n_joints) for a in "xyz"]
    lines = [",".join(header)]
    for i, frame in enumerate(seq.frames):
        lines.append(",".join([str(i)] + [f"{v:.9g}" for v in frame.ravel()]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def validate_sequence(seq) -> list[str]:
    """Return a list of invariant violations; empty when ``seq`` is well formed.

    Accepts an ``ActionSequence`` or any iterable of per-frame coordinate arrays,
    which lets callers check raw data before building a sequence.
    """
    frames = seq.frames if isinstance(seq, ActionSequence) else list(seq)
    violations = []
    if len(frames) < 1:
        return ["sequence has no frames"]
    joint_counts = set()
    for i, fr in enumerate(frames):
        fr = np.asarray(fr, dtype=np.float64)
        if fr.ndim != 2 or fr.shape[1] != 3:
            violations.append(f"frame {i}: shape {fr.shape} is not (J, 3)")
            continue
        if fr.shape[0] < 2:
            violations.append(f"frame {i}: fewer than 2 joints")
        joint_counts.add(fr.shape[0])
        if not np.all(np.isfinite(fr)):
            violations.append(f"frame {i}: non-finite coordinate")
    if len(joint_counts) > 1:
        violations.append(f"inconsistent joint counts across frames: {sorted(joint_counts)}")
    return violations


# -- manifests -----------------------------------------------------------------


def _entry_from_json(raw: dict, base: Path, default_format: str) -> ManifestEntry:
    try:
        path = Path(raw["path"])
        entry = ManifestEntry(
            path=path if path.is_absolute() else base / path,
            label=str(raw["label"]),
            subject=int(raw["subject"]),
            trial=int(raw.get("trial", 1)),
            format=raw.get("format", default_format),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SkeletonFormatError(f"bad manifest entry {raw!r}: {exc}") from None
    if entry.format not in FORMATS:
        raise SkeletonFormatError(f"unknown format {entry.format!r} in manifest")
    return entry


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Read a JSON manifest; relative entry paths resolve against its folder.

    Entries whose ``path`` (or ``[subject, trial, label]`` triple) is listed in
    the optional ``exclude`` array are dropped and kept on ``excluded``.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SkeletonFormatError(f"{path}: {exc}") from None
    base = path.parent
    default_format = raw.get("format", "canonical-csv")
    entries = [_entry_from_json(e, base, default_format) for e in raw.get("entries", [])]
    excluded_keys = set()
    for item in raw.get("exclude", []):
        if isinstance(item, str):
            p = Path(item)
            excluded_keys.add(p if p.is_absolute() else base / p)
        else:
            excluded_keys.add(tuple(str(v) for v in item))
    kept, dropped = [], []
    for e in entries:
        key = (str(e.subject), str(e.trial), e.label)
        (dropped if e.path in excluded_keys or key in excluded_keys else kept).append(e)
    manifest = DatasetManifest(
        kept, int(raw.get("joint_count", 20)), raw.get("sample_rate"), dropped
    )
    if check_files:
        missing = [str(e.path) for e in kept if not e.path.exists()]
        if missing:
            raise SkeletonFormatError(f"manifest references missing files: {missing[:3]}")
    return manifest


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    base = path.parent.resolve()
    entries = []
    for e in manifest.entries:
        p = Path(e.path).resolve()
        try:
            p = p.relative_to(base)
        except ValueError:
            pass
        entries.append(
            {"path": p.as_posix(), "label": e.label, "subject": e.subject,
             "trial": e.trial, "format": e.format}
        )
    doc = {"joint_count": manifest.joint_count, "sample_rate": manifest.sample_rate,
           "entries": entries}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_entry(entry: ManifestEntry, joint_count: int) -> ActionSequence:
    seq = load_sequence(entry.path, entry.format, joint_count=joint_count,
                        label=entry.label, subject=entry.subject, trial=entry.trial)
    if seq.n_joints != joint_count:
        raise SkeletonFormatError(
            f"{entry.path}: {seq.n_joints} joints, manifest says {joint_count}"
        )
    return seq


def split_entries(
    manifest: DatasetManifest, rule: str = "odd-train", subjects: Sequence[int] | None = None
) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Partition manifest entries by subject.

    ``odd-train`` trains on odd subject ids; ``listed-subjects`` trains on the
    ids given in ``subjects``. Every other subject goes to the test side.
    """
    known = set(manifest.subjects)
    if rule == "odd-train":
        train_ids = {s for s in known if s % 2 == 1}
    elif rule == "listed-subjects":
        if not subjects:
            raise ValueError("listed-subjects rule needs a subject list")
        unknown = sorted(set(subjects) - known)
        if unknown:
            raise ValueError(f"unknown subjects in split list: {unknown}")
        train_ids = set(subjects)
    else:
        raise ValueError(f"unknown split rule {rule!r}")
    train = [e for e in manifest.entries if e.subject in train_ids]
    test = [e for e in manifest.entries if e.subject not in train_ids]
    if not train:
        raise ValueError(f"split rule {rule!r} leaves the training set empty")
    return train, test


def split_cross_subject(
    manifest: DatasetManifest, rule: str = "odd-train", subjects: Sequence[int] | None = None
) -> tuple[list[ActionSequence], list[ActionSequence]]:
    train, test = split_entries(manifest, rule, subjects)
    load = lambda e: load_entry(e, manifest.joint_count)  # noqa: E731
    return [load(e) for e in train], [load(e) for e in test]


def sequence_id(seq: ActionSequence) -> str:
    if seq.name:
        return seq.name
    return f"{seq.label}_s{seq.subject}_t{seq.trial}"


def common_joint_count(seqs: Iterable[ActionSequence]) -> int:
    counts = {s.n_joints for s in seqs}
    if len(counts) != 1:
        raise ValueError(f"inconsistent joint counts: {sorted(counts)}")
    return counts.pop()


__all__ = [
    "ActionSequence", "DatasetManifest", "LabelSet", "ManifestEntry", "SkeletonFormatError",
    "common_joint_count", "load_entry", "load_manifest", "load_sequence", "sequence_id",
    "split_cross_subject", "split_entries", "validate_sequence", "write_manifest",
    "write_sequence",
]
