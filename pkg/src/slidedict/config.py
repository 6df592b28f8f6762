"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Keys are the dotted names in
``KEYS``; command-line flags with the same names override file values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .do3dj import DEFAULT_L
from .scoring import FusionWeights
from .sparse import DEFAULT_EPS, DEFAULT_LAMBDA, DEFAULT_MAX_ITER, DEFAULT_TOL
from .windowing import DEFAULT_N, DEFAULT_ONLINE_LENGTHS, DEFAULT_W, WindowSpec

WORKERS_ENV = "SLIDEDICT_WORKERS"


def int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


# key -> (parser, default)
KEYS = {
    "manifest": (str, None),
    "split.rule": (str, "odd-train"),
    "split.subjects": (int_list, ()),
    "windows.W": (int, DEFAULT_W),
    "windows.N": (int, DEFAULT_N),
    "windows.online_lengths": (int_list, DEFAULT_ONLINE_LENGTHS),
    "sparse.lambda": (float, DEFAULT_LAMBDA),
    "sparse.tol": (float, DEFAULT_TOL),
    "sparse.max_iter": (int, DEFAULT_MAX_ITER),
    "sparse.eps": (float, DEFAULT_EPS),
    "do3dj.L": (int, DEFAULT_L),
    "fusion.mu1": (float, 0.5),
    "output_dir": (str, "results"),
    "seed": (int, 0),
    "workers": (int, 1),
}


class ConfigError(ValueError):
    pass


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return raw


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_sources(cls, path=None, overrides: dict | None = None) -> "ExperimentConfig":
        raw = {}
        base = Path(".")
        if path is not None:
            path = Path(path)
            raw.update(parse_text(path.read_text(encoding="utf-8"), str(path)))
            base = path.parent
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        unknown = sorted(set(raw) - set(KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        values = {}
        for key, (parse, default) in KEYS.items():
            try:
                values[key] = parse(raw[key]) if key in raw else default
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        if WORKERS_ENV in os.environ:
            values["workers"] = int(os.environ[WORKERS_ENV])
        cfg = cls(values, base)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        if v["sparse.lambda"] <= 0 or v["sparse.tol"] <= 0 or v["sparse.eps"] <= 0:
            raise ConfigError("sparse.lambda, sparse.tol and sparse.eps must be positive")
        if v["sparse.max_iter"] < 1 or v["do3dj.L"] < 1 or v["workers"] < 1:
            raise ConfigError("sparse.max_iter, do3dj.L and workers must be >= 1")
        if not 0.0 <= v["fusion.mu1"] <= 1.0:
            raise ConfigError("fusion.mu1 must lie in [0, 1]")
        if v["split.rule"] not in ("odd-train", "listed-subjects"):
            raise ConfigError(f"unknown split.rule {v['split.rule']!r}")
        try:
            self.window_spec
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def window_spec(self) -> WindowSpec:
        v = self.values
        return WindowSpec(v["windows.W"], v["windows.N"], v["windows.online_lengths"])

    @property
    def manifest_path(self) -> Path:
        if not self.values["manifest"]:
            raise ConfigError("config does not name a manifest")
        p = Path(self.values["manifest"])
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        p = Path(self.values["output_dir"])
        return p if p.is_absolute() else self.base_dir / p

    def model_params(self) -> dict:
        """Keyword arguments for ``train_model`` (everything but the spec)."""
        v = self.values
        return dict(lam=v["sparse.lambda"], **self.runtime_params(with_lengths=False))

    def runtime_params(self, with_lengths: bool = True) -> dict:
        """Settings not stored in the model file, for ``load_model``."""
        v = self.values
        out = dict(tol=v["sparse.tol"], max_iter=v["sparse.max_iter"], eps=v["sparse.eps"],
                   L=v["do3dj.L"], weights=FusionWeights(v["fusion.mu1"]))
        if with_lengths:
            out["online_lengths"] = v["windows.online_lengths"]
        return out

    def dump(self) -> str:
        lines = []
        for key, value in self.values.items():
            if isinstance(value, tuple):
                value = ",".join(str(x) for x in value)
            if value is None:
                continue
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"
