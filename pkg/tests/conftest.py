import pytest

from tp06kit import default_parameters
from tp06kit.continuation import resting_equilibrium
from tp06kit.integrate import equilibrate

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def params():
    return default_parameters("modified")


@pytest.fixture(scope="session")
def original_params():
    return default_parameters("original")


@pytest.fixture(scope="session")
def relaxed(params):
    """Resting state after 10 s without stimulus."""
    return equilibrate(params).state


@pytest.fixture(scope="session")
def rest(params):
    """Exact resting equilibrium."""
    return resting_equilibrium(params).state


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (passed, detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
