import numpy as np
import pytest

from rankreg import geometry


def random_transform(rng, scale_range=(1.0, 5.0)):
    lo, hi = scale_range
    s = lo if lo == hi else rng.uniform(lo, hi)
    return geometry.SimilarityTransform(s, geometry.random_rotation(rng), rng.uniform(-1, 1, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Filled by test_acceptance; printed after the run.
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
