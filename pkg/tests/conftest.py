import numpy as np
import pytest

from acceptance_registry import REGISTRY


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not REGISTRY:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REGISTRY, key=lambda k: int(k)):
        terminalreporter.write_line(REGISTRY[key])
