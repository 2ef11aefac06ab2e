import numpy as np
import pytest

from irisentropy.codes import CodeLayout, IrisCode

ACCEPTANCE_LINES = []


@pytest.fixture
def toy_layout():
    # 16 bits: 4 angular positions x 2 radial x 2 phase.
    return CodeLayout(4, 2, 2)


@pytest.fixture
def layout():
    return CodeLayout()


@pytest.fixture
def rng():
    return np.random.default_rng(20230718)


def random_code(rng, layout, ident="x", mask_bits=None):
    bits = rng.integers(0, 2, layout.total_bits, dtype=np.uint8)
    return IrisCode.from_bits(ident, layout, bits, mask_bits)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
