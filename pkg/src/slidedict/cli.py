"""Command-line entry point: ``slidedict {train,eval,stream,synth,report}``."""

from __future__ import annotations

import argparse
import glob
import sys
from pathlib import Path

from . import evaluation as ev
from .config import KEYS, ConfigError, ExperimentConfig, parse_text
from .model import load_model, save_model
from .scoring import train_model
from .skeleton import SkeletonFormatError, load_manifest, sequence_id, split_cross_subject
from .synth import SynthSpec, generate, write_dataset

SYNTH_KEYS = {
    "classes": int, "joints": int, "frames_min": int, "frames_max": int,
    "noise_sigma": float, "seed": int, "amplitude": float, "active_joints": int,
    "pose_jitter": float, "offset_range": float, "tempo_jitter": float,
    "n_per_class": int, "subjects": int,
}


def parse_fractions(text: str) -> list[float]:
    """``0.1..1.0`` (step 0.1), ``0.1..1.0:0.05`` or a comma list."""
    text = text.strip()
    if ".." in text:
        lo, rest = text.split("..", 1)
        hi, _, step = rest.partition(":")
        lo, hi, step = float(lo), float(hi), float(step or 0.1)
        n = int(round((hi - lo) / step))
        out = [round(lo + k * step, 10) for k in range(n + 1)]
    else:
        out = [float(v) for v in text.split(",") if v.strip()]
    if not out or any(not 0 < f <= 1 for f in out):
        raise ValueError(f"fractions must lie in (0, 1]: {text!r}")
    return out


def _config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k, None) for k in KEYS}
    return ExperimentConfig.from_sources(args.config, overrides)


def _split(cfg: ExperimentConfig):
    manifest = load_manifest(cfg.manifest_path)
    train, test = split_cross_subject(manifest, cfg["split.rule"], cfg["split.subjects"] or None)
    return manifest, train, test


def _load(cfg: ExperimentConfig, path, manifest):
    model = load_model(path, **cfg.runtime_params())
    if model.n_joints != manifest.joint_count:
        raise ValueError(f"model has {model.n_joints} joints, dataset {manifest.joint_count}")
    return model


def cmd_train(args) -> int:
    cfg = _config(args)
    _, train, _ = _split(cfg)
    model = train_model(train, cfg.window_spec, **cfg.model_params())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    d = model.dictionary
    print(f"trained {out}: {d.n_atoms} atoms ({d.W} windows x {len(train)} sequences), "
          f"d={d.dim}, {len(model.classes)} classes")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    manifest, _, test = _split(cfg)
    if not test:
        raise ValueError("split leaves no test sequences")
    model = _load(cfg, args.model, manifest)
    report, predicted, traces = ev.evaluate_offline(model, test, cfg["workers"])
    out = cfg.output_dir
    (out / "offline_traces").mkdir(parents=True, exist_ok=True)
    ev.write_confusion(report, out / "confusion.csv")
    ev.write_per_class(report, out / "per_class.csv")
    ev.write_predictions(test, predicted, out / "predictions.csv")
    for seq, trace in zip(test, traces):
        ev.write_trace(trace, out / "offline_traces" / f"{sequence_id(seq)}.csv")
    summary = report.summary()
    (out / "summary.txt").write_text(summary + "\n", encoding="utf-8")
    print(summary)
    return 0


def cmd_stream(args) -> int:
    cfg = _config(args)
    fractions = parse_fractions(args.fractions)
    manifest, _, test = _split(cfg)
    if not test:
        raise ValueError("split leaves no test sequences")
    model = _load(cfg, args.model, manifest)
    report, preds, traces = ev.evaluate_online(model, test, fractions, cfg["workers"])
    out = cfg.output_dir
    (out / "traces").mkdir(parents=True, exist_ok=True)
    ev.write_curve(report, out / "curve.csv")
    ev.write_predictions(test, preds, out / "online_predictions.csv",
                         columns=[f"p{f:g}" for f in fractions])
    for seq, trace in zip(test, traces):
        ev.write_trace(trace, out / "traces" / f"{sequence_id(seq)}.csv")
    summary = report.summary()
    (out / "summary_online.txt").write_text(summary + "\n", encoding="utf-8")
    print(summary)
    return 0


def cmd_synth(args) -> int:
    raw = parse_text(Path(args.spec).read_text(encoding="utf-8"), args.spec) if args.spec else {}
    raw.update({k: v for k in SYNTH_KEYS if (v := getattr(args, k)) is not None})
    unknown = sorted(set(raw) - set(SYNTH_KEYS))
    if unknown:
        raise ConfigError(f"unknown synth keys: {unknown}")
    values = {k: SYNTH_KEYS[k](v) for k, v in raw.items()}
    n_per_class = values.pop("n_per_class", 20)
    subjects = values.pop("subjects", 10)
    manifest, seqs = generate(SynthSpec(**values), n_per_class, subjects)
    out = Path(args.out_dir)
    manifest_path = write_dataset(out, manifest, seqs)
    cfg_path = out / "experiment.cfg"
    if not cfg_path.exists():
        cfg_path.write_text(ExperimentConfig.from_sources(
            None, {"manifest": "manifest.json"}).dump(), encoding="utf-8")
    print(f"wrote {len(seqs)} sequences, {manifest_path} and {cfg_path}")
    return 0


def cmd_report(args) -> int:
    paths = sorted({p for pattern in args.traces for p in glob.glob(pattern, recursive=True)})
    evolution, final = ev.merge_traces(paths, args.out_dir)
    print(f"merged {len(paths)} traces into {evolution} and {final}")
    return 0


def _add_overrides(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("config overrides")
    for key in KEYS:
        group.add_argument(f"--{key}", dest=key, metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slidedict", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="build and save a model from the training split")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    _add_overrides(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="offline evaluation on the test split")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    _add_overrides(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stream", help="online replay of the test split")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--fractions", default="0.1..1.0")
    _add_overrides(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--spec", help="key = value file with generator settings")
    p.add_argument("--out-dir", required=True)
    for key in SYNTH_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="merge score traces into plot-ready CSVs")
    p.add_argument("--traces", required=True, nargs="+", help="trace CSV paths or globs")
    p.add_argument("--out-dir", default="report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, SkeletonFormatError) as exc:
        print(f"slidedict: error: {exc}", file=sys.stderr)
        return 2

