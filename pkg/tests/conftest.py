import pytest

from unigap.weights import Window, WeightSpec

_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Collect one summary line per acceptance criterion; printed at the end of the run."""
    def record(number, title, passed, detail):
        line = f"[criterion {number}] {'PASS' if passed else 'FAIL'} {title}: {detail}"
        print(line)
        _CRITERIA.append(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)


@pytest.fixture
def gue():
    return WeightSpec.gaussian()


@pytest.fixture
def lue2():
    return WeightSpec.laguerre(2)


@pytest.fixture
def unit_window():
    return Window(-1, 1)
