import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lloydspp.core import ClusteringInstance  # noqa: E402


def random_instance(rng, n, k, dim=2):
    X = rng.normal(size=(n, dim))
    target = np.arange(n) % k
    return ClusteringInstance(X, k, target)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def separable():
    """Three tight, far-apart blobs of four points each."""
    base = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1]])
    X = np.concatenate([base, base + 100.0, base + [0.0, 200.0]])
    return ClusteringInstance(X, 3, np.repeat([0, 1, 2], 4))


@pytest.fixture
def verdict(capsys):
    """Print one pass/fail line for a criterion, then assert it."""
    import verdicts

    def report(number, name, ok, detail):
        line = verdicts.record(number, name, bool(ok), detail)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    import verdicts

    if verdicts.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(verdicts.LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
