"""Binary model container.

Layout (all integers unsigned 32-bit little-endian unless noted)::

    u8      format version (currently 1)
    4s      magic b"SLDM"
    u32 x5  d, M, W, C, N
    f64     lambda
    C x     label: u32 byte length + UTF-8 bytes
    f64     atoms, d*M values, column-major
    i32     per-column metadata, M rows of (class, window, example)
    u32     number of training sequences T
    T x     training sequence:
              u32 class index, i64 subject (-1 if unknown), i64 trial (-1),
              u32 + UTF-8 name, u32 F, u32 J, f64 frames F*J*3 (row-major)

Solver tolerances, the pool size L, fusion weights and online window
lengths are runtime settings and are supplied when loading.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .skeleton import ActionSequence, LabelSet
from .sparse import Dictionary
from .scoring import Model
from .windowing import WindowSpec

VERSION = 1
MAGIC = b"SLDM"


def _put_str(buf: io.BytesIO, text: str) -> None:
    raw = text.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def dump_model(model: Model) -> bytes:
    d = model.dictionary
    labels = d.label_set.classes
    buf = io.BytesIO()
    buf.write(struct.pack("<B", VERSION))
    buf.write(MAGIC)
    buf.write(struct.pack("<5I", d.dim, d.n_atoms, d.W, len(labels), model.spec.N))
    buf.write(struct.pack("<d", model.lam))
    for name in labels:
        _put_str(buf, name)
    buf.write(np.asarray(d.atoms, dtype="<f8").tobytes(order="F"))
    meta = np.stack([d.class_index, d.window_index, d.example_index], axis=1).astype("<i4")
    buf.write(meta.tobytes(order="C"))
    buf.write(struct.pack("<I", len(model.train)))
    for seq in model.train:
        buf.write(struct.pack("<Iqq", labels.index(seq.label),
                              -1 if seq.subject is None else seq.subject,
                              -1 if seq.trial is None else seq.trial))
        _put_str(buf, seq.name)
        buf.write(struct.pack("<II", seq.n_frames, seq.n_joints))
        buf.write(np.asarray(seq.frames, dtype="<f8").tobytes(order="C"))
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("model file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        return self.take(n).decode("utf-8")

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype)


def parse_model(data: bytes, **runtime) -> Model:
    """Rebuild a model from container bytes; ``runtime`` fills the settings
    not stored in the file (``online_lengths``, ``tol``, ``max_iter``,
    ``eps``, ``L``, ``weights``)."""
    r = _Reader(data)
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise ValueError(f"unsupported model format version {version}")
    if r.take(4) != MAGIC:
        raise ValueError("not a model file (bad magic)")
    dim, m, W, C, N = r.unpack("<5I")
    (lam,) = r.unpack("<d")
    labels = tuple(r.string() for _ in range(C))
    atoms = r.array("<f8", dim * m).reshape((dim, m), order="F").astype(np.float64)
    meta = r.array("<i4", 3 * m).reshape(m, 3).astype(np.int64)
    (n_train,) = r.unpack("<I")
    train = []
    for _ in range(n_train):
        cls, subject, trial = r.unpack("<Iqq")
        name = r.string()
        F, J = r.unpack("<II")
        frames = r.array("<f8", F * J * 3).reshape(F, J, 3)
        train.append(ActionSequence(frames, labels[cls], None if subject < 0 else int(subject),
                                    None if trial < 0 else int(trial), name))
    if r.pos != len(data):
        raise ValueError("trailing bytes after model payload")

    label_set = LabelSet.from_sequences(train)
    if label_set.classes != labels:
        raise ValueError("training sequences do not match the stored label set")
    dictionary = Dictionary(atoms, meta[:, 0], meta[:, 1], meta[:, 2], label_set, W)
    spec_kw = {}
    if "online_lengths" in runtime:
        spec_kw["online_lengths"] = runtime.pop("online_lengths")
    return Model(dictionary, tuple(train), WindowSpec(W, N, **spec_kw), lam=lam, **runtime)


def save_model(model: Model, path) -> None:
    Path(path).write_bytes(dump_model(model))


def load_model(path, **runtime) -> Model:
    return parse_model(Path(path).read_bytes(), **runtime)
