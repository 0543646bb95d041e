import numpy as np
import pytest

from mhdccm.dataset import from_arrays


def make_dataset(rng, n_per_class, m, p, shift=2.0):
    """Class-contiguous data whose class means differ along random directions."""
    labels = np.repeat(np.arange(len(n_per_class)), n_per_class)
    mx = rng.normal(scale=shift, size=(len(n_per_class), m))
    my = rng.normal(scale=shift, size=(len(n_per_class), p))
    x = mx[labels] + rng.normal(size=(labels.size, m))
    y = my[labels] + rng.normal(size=(labels.size, p))
    return from_arrays(x, y, labels)


def random_partition(rng, n_max=30, c_max=6):
    c = int(rng.integers(1, c_max + 1))
    counts = rng.integers(1, max(2, n_max // c) + 1, size=c)
    return np.repeat(np.arange(c), counts), counts


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
