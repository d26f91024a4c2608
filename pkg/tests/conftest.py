import sys

import numpy as np
import pytest

from efrtf.synthset import identity_factory, resonance_factory, write_synthetic_dataset


@pytest.fixture(scope="session")
def identity_manifest(tmp_path_factory):
    """Two participants whose EEG channels equal the extracted envelope."""
    return write_synthetic_dataset(tmp_path_factory.mktemp("identity"), identity_factory, ("s01", "s04"), seed=3)


@pytest.fixture(scope="session")
def resonance_manifest(tmp_path_factory):
    """Thirteen participants, every channel with an 11 Hz resonance and sensor noise."""
    return write_synthetic_dataset(tmp_path_factory.mktemp("resonance"), resonance_factory(seed=1), seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
