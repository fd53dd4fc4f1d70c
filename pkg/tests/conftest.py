import numpy as np
import pytest

from catm import PulseSpec, make_ladder, make_two_level


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def canonical_pulse():
    return PulseSpec.from_intensity(750.0, 0.335, 1e13)


@pytest.fixture(scope="session")
def ladder16():
    return make_ladder(16, 0.1, 1.0, 14)


@pytest.fixture(scope="session")
def weak_two_level():
    return make_two_level(0.335, 0.1)


def random_state(rng, n):
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
