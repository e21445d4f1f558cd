import numpy as np
import pytest
from hypothesis import settings

from sfpe import BranchingVectorSpec, Law, SfpeMap

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    def log(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {name}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quicksort():
    return SfpeMap.linear(zero_mean=True), BranchingVectorSpec.quicksort()


@pytest.fixture
def find():
    return SfpeMap.tree_sum(), BranchingVectorSpec.find()


@pytest.fixture
def zero_weights():
    """Custom spec with C = 0 and a non-degenerate Q."""
    return BranchingVectorSpec.custom(Law.poisson(2.0), Law.constant(0.0), Law.uniform(-1.0, 2.0))
