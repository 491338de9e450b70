import pytest

from randmult.primes import build_prime_table
from randmult.schedule import build_schedule


@pytest.fixture(scope="session")
def table():
    return build_prime_table(10**6)


@pytest.fixture(scope="session")
def small_table():
    return build_prime_table(20_000)


@pytest.fixture(scope="session")
def desk_schedule():
    return build_schedule(10**5, 3, 12.5, 2.0, 1e-3, 2, desk_scale=True, y0=10)


@pytest.fixture(scope="session")
def schedule_1e4():
    return build_schedule(10**4, 3, 12.5, 2.0, 1e-3, 2, desk_scale=True, y0=10)


_ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line; the lines are printed at the end of the run."""

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
