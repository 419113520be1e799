import pytest

from camr.simulation import simulate


@pytest.fixture(scope="session")
def worked_example():
    """The K=6 cluster: q=2, k=3, gamma=2, 8-byte values."""
    return simulate(2, 3, 2, value_bytes=8, seed=0)


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion itself stays in the test."""
    def record(name, ok, detail=""):
        ACCEPTANCE.append((name, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
