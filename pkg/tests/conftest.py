import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Records one summary line per acceptance criterion."""

    def _report(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
