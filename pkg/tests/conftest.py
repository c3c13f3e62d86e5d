import numpy as np
import pytest

# Renyi monolayer line fraction F(tau), evaluated independently with mpmath
# (30 digits) as int_0^tau exp(-2 (gamma + ln u + E1(u))) du.
RENYI_REFERENCE = {
    0.5: 0.325656259428059,
    1.0: 0.471424633908587,
    2.0: 0.593459638379645,
    5.0: 0.684569702130329,
    10.0: 0.71607426568401,
    20.0: 0.731836082669188,
    50.0: 0.741293185219668,
    500.0: 0.746967446750037,
}
RENYI_LIMIT = 0.747597920253411


def pytest_addoption(parser):
    parser.addoption("--jobs", type=int, default=8, help="threads for replicated simulations")


@pytest.fixture(scope="session")
def jobs(request):
    return request.config.getoption("--jobs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


class AcceptanceLog:
    def record(self, label: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
        print(_ACCEPTANCE[-1])
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
