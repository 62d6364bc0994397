import numpy as np
import pytest

from partbn.bnio import forward_sample, load_network
from partbn.dataset import Dataset


@pytest.fixture(scope="session")
def chain6():
    return load_network("chain6")


@pytest.fixture(scope="session")
def mb6():
    return load_network("mb6")


@pytest.fixture(scope="session")
def chain6_data(chain6):
    return forward_sample(chain6, 50000, seed=0)


@pytest.fixture(scope="session")
def mb6_data(mb6):
    return forward_sample(mb6, 50000, seed=0)


def make_data(cols, cards=None, names=None):
    cols = np.asarray(cols, dtype=np.int64)
    if cards is None:
        cards = [int(c.max()) + 1 if c.size else 1 for c in cols]
    if names is None:
        names = [f"X{i}" for i in range(len(cols))]
    return Dataset(names, cards, cols)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Log one acceptance verdict; the lines are repeated in the run summary."""

    def _record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
