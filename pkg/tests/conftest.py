import sys
import numpy as np
import pytest

from prckit import f2


@pytest.fixture
def rng():
    return f2.random_source(12345)


def chi2_uniform_p(counts) -> float:
    from scipy import stats

    counts = np.asarray(counts, dtype=np.float64)
    return float(stats.chisquare(counts).pvalue)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
