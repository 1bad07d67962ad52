import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from divauction import Dyadic  # noqa: E402


def dyadics(max_mantissa_bits: int = 80, min_exp: int = -120, max_exp: int = 40):
    m = st.integers(min_value=-(2**max_mantissa_bits), max_value=2**max_mantissa_bits)
    e = st.integers(min_value=min_exp, max_value=max_exp)
    return st.builds(Dyadic, m, e)


def unit_dyadics(bits: int = 8):
    """Dyadics k / 2**bits in [0, 1]."""
    return st.integers(min_value=0, max_value=2**bits).map(lambda k: Dyadic(k, -bits))


_ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_line():
    """Record one verdict line; printed now and again in the run summary."""

    def record(line):
        print(line)
        _ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("AC-")[1].split()[0])):
            terminalreporter.write_line(line)
