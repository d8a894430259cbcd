import pytest

from floquet_bec import params_in_units_of_k


@pytest.fixture(scope="session")
def left():
    """Phase-continuing reference set: V0 = -0.3k, EF = 3k (g1d = 1)."""
    return params_in_units_of_k(-0.3, 3.0)


@pytest.fixture(scope="session")
def right():
    """Phase-jumping reference set: V0 = -2k, EF = 0.5k (g1d = 1)."""
    return params_in_units_of_k(-2.0, 0.5)


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    """Store one acceptance verdict; printed once at the end of the session."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
