import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr


def rel_err(a, b) -> float:
    """Relative difference of two reals, computed at 600 bits."""
    with gmpy2.context(gmpy2.get_context(), precision=600):
        a, b = mpfr(str(a)) if not isinstance(a, mpfr) else mpfr(a), mpfr(str(b)) if not isinstance(b, mpfr) else mpfr(b)
        scale = max(abs(b), mpfr(1e-300))
        return float(abs(a - b) / scale)


@pytest.fixture
def mp():
    """mpmath at 120 significant digits, restored afterwards."""
    old = mpmath.mp.dps
    mpmath.mp.dps = 120
    yield mpmath.mp
    mpmath.mp.dps = old


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
