import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fusionface.dataset import synthesize_dataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_dataset():
    return synthesize_dataset(5, 10, seed=1)


@pytest.fixture(scope="session")
def small_dataset():
    """Twelve subjects: enough for multi-row reports that stay fast."""
    return synthesize_dataset(12, 10, seed=7)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
