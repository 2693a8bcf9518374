import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from laa_dpp.config import load_config  # noqa: E402


@pytest.fixture(scope="session")
def defaults():
    """Shipped default experiment (network, env, sca, sim)."""
    return load_config()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
