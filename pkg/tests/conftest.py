import numpy as np
import pytest

from predualpoisson.models import BUILTIN_NAMES, resolve_preset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=BUILTIN_NAMES)
def builtin(request):
    return resolve_preset(request.param)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def emit():
    """Record one PASS/FAIL verdict line and fail the test when it is FAIL."""

    def _emit(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return _emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
