import numpy as np
import pytest

from ovvis.pipeline.bundle import Bundle
from ovvis.pipeline.synth import ScenarioSpec, synth_generate

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_bundle(tmp_path):
    def _make(name="b", **kwargs):
        return Bundle.open(synth_generate(ScenarioSpec(**kwargs), tmp_path / name))
    return _make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
