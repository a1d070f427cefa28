import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from fisheye.model import CameraModel  # noqa: E402


@pytest.fixture
def unit_cam():
    return CameraModel(1.0)


@pytest.fixture
def cam500():
    return CameraModel(500.0)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one result line per acceptance criterion; printed in the terminal summary."""

    def record(number, passed, detail):
        _ACCEPTANCE_LINES.append((number, f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
