import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def report():
    """``report(n, ok, detail)`` prints and records one acceptance line."""

    def _report(n, ok, detail):
        line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
