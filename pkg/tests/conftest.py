import sys
from pathlib import Path

import pytest

from hotspots import _accel

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per kernel implementation."""
    prev = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(prev)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
