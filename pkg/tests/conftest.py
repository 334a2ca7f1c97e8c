import math

import numpy as np
import pytest

from memcirc.signals import PeriodicWaveform

TWO_PI = 2 * math.pi


@pytest.fixture
def unit_sine():
    return PeriodicWaveform.from_function(np.sin, TWO_PI, 4096)


@pytest.fixture
def unit_cosine():
    return PeriodicWaveform.from_function(np.cos, TWO_PI, 4096)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""

    def record(number, text, ok):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {text}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
