import numpy as np
import pytest

from slidedict.scoring import train_model
from slidedict.synth import SynthSpec, generate
from slidedict.windowing import WindowSpec

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def small_data():
    """3 classes x 4 sequences over 2 subjects, short sequences."""
    spec = SynthSpec(classes=3, frames_min=30, frames_max=40, noise_sigma=0.02, seed=3)
    _, seqs = generate(spec, n_per_class=4, subjects=2)
    train = [s for s in seqs if s.subject == 1]
    test = [s for s in seqs if s.subject == 2]
    return train, test


@pytest.fixture(scope="session")
def small_model(small_data):
    train, _ = small_data
    return train_model(train, WindowSpec(W=4, N=1, online_lengths=(8, 16)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
