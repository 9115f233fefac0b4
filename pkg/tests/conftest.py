import numpy as np
import pytest

from simplexmargin.codec import build_codebook


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[2, 3, 4, 7])
def cb(request):
    return build_codebook(request.param)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def record(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
