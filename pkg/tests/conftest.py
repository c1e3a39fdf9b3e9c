import numpy as np
import pytest

from coinwalk import find_bound_states, hadamard_coin, make_coin_field

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def hadamard_field():
    return make_coin_field("homogeneous", C0=hadamard_coin())


@pytest.fixture(scope="session")
def defect_field():
    """Hadamard walk with the identity coin at the origin."""
    return make_coin_field("one_defect", C0=hadamard_coin(), defect=np.eye(2))


@pytest.fixture(scope="session")
def defect_bound_states(defect_field):
    return find_bound_states(defect_field, 200)


@pytest.fixture
def acceptance_record():
    def record(label: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE.append((label, bool(passed), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
