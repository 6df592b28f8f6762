"""Seeded synthetic skeleton actions for end-to-end checks without real datasets.

Each class moves a subset of joints along sinusoids with a class-specific
frequency, amplitude and phase. Every sequence gets its own length, a random
global offset and a small per-joint pose perturbation, then Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .skeleton import ActionSequence, DatasetManifest, ManifestEntry, write_manifest, write_sequence

# Kinect v1 style 20-joint rest pose, metres (x right, y up, z forward).
KINECT20_REST = np.array([
    [0.00, 0.90, 0.00],   # hip centre
    [0.00, 1.10, 0.00],   # spine
    [0.00, 1.40, 0.00],   # shoulder centre
    [0.00, 1.60, 0.00],   # head
    [-0.20, 1.40, 0.00],  # left shoulder
    [-0.25, 1.15, 0.00],  # left elbow
    [-0.27, 0.90, 0.00],  # left wrist
    [-0.28, 0.82, 0.00],  # left hand
    [0.20, 1.40, 0.00],   # right shoulder
    [0.25, 1.15, 0.00],   # right elbow
    [0.27, 0.90, 0.00],   # right wrist
    [0.28, 0.82, 0.00],   # right hand
    [-0.10, 0.85, 0.00],  # left hip
    [-0.10, 0.45, 0.00],  # left knee
    [-0.10, 0.08, 0.00],  # left ankle
    [-0.10, 0.03, 0.10],  # left foot
    [0.10, 0.85, 0.00],   # right hip
    [0.10, 0.45, 0.00],   # right knee
    [0.10, 0.08, 0.00],   # right ankle
    [0.10, 0.03, 0.10],   # right foot
])


@dataclass(frozen=True)
class SynthSpec:
    classes: int = 3
    joints: int = 20
    frames_min: int = 40
    frames_max: int = 70
    noise_sigma: float = 0.08
    seed: int = 0
    amplitude: float = 0.15
    active_joints: int = 6
    pose_jitter: float = 0.02
    offset_range: float = 0.5
    tempo_jitter: float = 0.05

    def __post_init__(self):
        if self.classes < 1 or self.joints < 2:
            raise ValueError("need at least one class and two joints")
        if not 1 <= self.frames_min <= self.frames_max:
            raise ValueError("need 1 <= frames_min <= frames_max")
        if self.noise_sigma < 0 or self.amplitude <= 0:
            raise ValueError("noise_sigma must be >= 0 and amplitude > 0")


@dataclass(frozen=True)
class ClassMotion:
    frequency: float
    amplitude: np.ndarray  # (J, 3)
    phase: np.ndarray  # (J,)


def rest_pose(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.joints == 20:
        return KINECT20_REST.copy()
    return rng.uniform([-0.3, 0.0, -0.1], [0.3, 1.7, 0.1], size=(spec.joints, 3))


def class_motions(spec: SynthSpec, rng: np.random.Generator) -> list[ClassMotion]:
    motions = []
    k = min(spec.active_joints, spec.joints)
    for c in range(spec.classes):
        amp = np.zeros((spec.joints, 3))
        active = rng.choice(spec.joints, size=k, replace=False)
        amp[active] = rng.normal(0.0, spec.amplitude, size=(k, 3))
        motions.append(ClassMotion(
            frequency=1.0 + 0.5 * c,  # distinct per class
            amplitude=amp,
            phase=rng.uniform(0, 2 * np.pi, size=spec.joints),
        ))
    return motions


def class_name(c: int) -> str:
    return f"a{c + 1:02d}"


def generate(
    spec: SynthSpec, n_per_class: int, subjects: int
) -> tuple[DatasetManifest, list[ActionSequence]]:
    """Generate ``n_per_class`` sequences per class spread round-robin over
    ``subjects`` (ids start at 1). Manifest paths are relative file names."""
    if n_per_class < 1 or subjects < 1:
        raise ValueError("n_per_class and subjects must be >= 1")
    class_rng, seq_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(2))
    rest = rest_pose(spec, class_rng)
    motions = class_motions(spec, class_rng)

    seqs, entries = [], []
    for c, motion in enumerate(motions):
        trials: dict[int, int] = {}
        for i in range(n_per_class):
            subject = i % subjects + 1
            trials[subject] = trials.get(subject, 0) + 1
            frames = _sequence(spec, rest, motion, seq_rng)
            label = class_name(c)
            name = f"{label}_s{subject:02d}_t{trials[subject]:02d}"
            seqs.append(ActionSequence(frames, label, subject, trials[subject], name))
            entries.append(ManifestEntry(Path(f"{name}.csv"), label, subject, trials[subject]))
    return DatasetManifest(entries, spec.joints), seqs


def _sequence(spec: SynthSpec, rest, motion: ClassMotion, rng: np.random.Generator) -> np.ndarray:
    F = int(rng.integers(spec.frames_min, spec.frames_max + 1))
    tau = np.linspace(0.0, 1.0, F) if F > 1 else np.zeros(1)
    freq = motion.frequency * (1.0 + rng.uniform(-spec.tempo_jitter, spec.tempo_jitter))
    pose = rest + rng.normal(0.0, spec.pose_jitter, size=rest.shape)
    offset = rng.uniform(-spec.offset_range, spec.offset_range, size=3)
    wave = np.sin(2 * np.pi * freq * tau[:, None] + motion.phase[None, :])  # (F, J)
    frames = pose[None] + offset + wave[:, :, None] * motion.amplitude[None]
    if spec.noise_sigma > 0:
        frames = frames + rng.normal(0.0, spec.noise_sigma, size=frames.shape)
    return frames


def write_dataset(out_dir, manifest: DatasetManifest, seqs: list[ActionSequence]) -> Path:
    """Write sequences as canonical CSV plus ``manifest.json``; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for entry, seq in zip(manifest.entries, seqs):
        path = out / entry.path
        write_sequence(seq, path)
        entries.append(ManifestEntry(path, entry.label, entry.subject, entry.trial))
    manifest_path = out / "manifest.json"
    write_manifest(DatasetManifest(entries, manifest.joint_count, manifest.sample_rate), manifest_path)
    return manifest_path
