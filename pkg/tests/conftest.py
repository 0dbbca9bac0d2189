import pytest

from fuzzyvsg.phasor import GridImpedance
from fuzzyvsg.powerflow import NetworkConfig


@pytest.fixture
def nominal_net():
    return NetworkConfig(220.0, GridImpedance(1.25, 4e-3))


@pytest.fixture
def resistive_net():
    return NetworkConfig(220.0, GridImpedance(0.75, 0.95e-3))


# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    def record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, f"criterion {n}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
