import numpy as np
import pytest

from sptchain.mps import aklt_tensor, product_tensor

# acceptance lines collected during the run and repeated in the terminal summary
ACCEPTANCE_LINES: list = []


@pytest.fixture
def aklt():
    return aklt_tensor()


@pytest.fixture
def product():
    return product_tensor(1, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_line():
    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
