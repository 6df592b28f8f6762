import csv

import pytest

from slidedict.cli import main, parse_fractions
from slidedict.config import WORKERS_ENV, ConfigError, ExperimentConfig


def test_defaults_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text("manifest = data/m.json  # relative\nwindows.W = 6\n\nsparse.lambda=0.2\n")
    cfg = ExperimentConfig.from_sources(cfg_path, {"windows.W": "5", "fusion.mu1": None})
    assert cfg["windows.W"] == 5 and cfg["sparse.lambda"] == 0.2
    assert cfg.window_spec.online_lengths == (8, 16, 24, 32)
    assert cfg.manifest_path == tmp_path / "data" / "m.json"
    assert cfg.model_params()["lam"] == 0.2
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert ExperimentConfig.from_sources(cfg_path)["workers"] == 3


@pytest.mark.parametrize("text", [
    "bogus.key = 1\n",
    "windows.W = x\n",
    "just a line\n",
    "sparse.lambda = 0\n",
    "fusion.mu1 = 1.5\n",
    "windows.online_lengths = 16,8\n",
    "split.rule = random\n",
])
def test_bad_configs(tmp_path, text):
    p = tmp_path / "c.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_sources(p)


def test_dump_round_trip(tmp_path):
    cfg = ExperimentConfig.from_sources(None, {"manifest": "m.json", "windows.online_lengths": "4,6"})
    p = tmp_path / "c.cfg"
    p.write_text(cfg.dump())
    assert ExperimentConfig.from_sources(p).values == cfg.values


def test_parse_fractions():
    assert parse_fractions("0.1..1.0") == [round(0.1 * k, 10) for k in range(1, 11)]
    assert parse_fractions("0.5..1.0:0.25") == [0.5, 0.75, 1.0]
    assert parse_fractions("0.7,1.0") == [0.7, 1.0]
    with pytest.raises(ValueError):
        parse_fractions("0,1")


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.slow
def test_cli_workflow(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    data = tmp_path / "data"
    assert main(["synth", "--out-dir", str(data), "--classes", "2", "--n-per-class", "4",
                 "--subjects", "2", "--frames-min", "30", "--frames-max", "36",
                 "--noise-sigma", "0.02"]) == 0
    cfg = str(data / "experiment.cfg")
    model = str(tmp_path / "model.sldm")
    common = ["--windows.W", "4", "--windows.N", "1", "--windows.online_lengths", "8,16"]
    assert main(["train", "--config", cfg, "--out", model, *common]) == 0
    assert "16 atoms" in capsys.readouterr().out
    assert main(["eval", "--config", cfg, "--model", model, *common]) == 0
    out = data / "results"
    assert len(_rows(out / "predictions.csv")) == 4
    conf = _rows(out / "confusion.csv")
    assert sum(int(r["a01"]) + int(r["a02"]) for r in conf) == 4
    assert main(["stream", "--config", cfg, "--model", model, "--fractions", "0.5,1.0", *common]) == 0
    assert [r["fraction"] for r in _rows(out / "curve.csv")] == ["0.5", "1"]
    assert main(["report", "--traces", str(out / "traces" / "*.csv"),
                 "--out-dir", str(tmp_path / "report")]) == 0
    final = _rows(tmp_path / "report" / "final_scores.csv")
    assert len(final) == 8 and sum(int(r["predicted"]) for r in final) == 4


def test_cli_errors(tmp_path, capsys):
    assert main(["report", "--traces", str(tmp_path / "none*.csv")]) == 2
    assert "no trace files" in capsys.readouterr().err
    cfg = tmp_path / "c.cfg"
    cfg.write_text("manifest = missing.json\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 2
