import numpy as np
import pytest

from sl0.dictionary import orthonormalize


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dict(rng):
    d, _ = orthonormalize(rng.standard_normal((4, 8)))
    return d


_CRITERIA = {}


@pytest.fixture
def record_criterion():
    def record(number, result, limit_s=None):
        ok = result.passed and (limit_s is None or result.seconds <= limit_s)
        extra = "" if limit_s is None else f" [limit {limit_s:.0f}s]"
        _CRITERIA[number] = (
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {result.name}: "
            f"{result.summary} ({result.seconds:.1f}s){extra}"
        )
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
