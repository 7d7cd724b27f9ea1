import numpy as np
import pytest

from cshrink.sampling import RngStream


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, p, df=None):
    x = crandn(rng, df or p + 3, p)
    return x.conj().T @ x + 0.1 * np.eye(p)


@pytest.fixture
def nprng():
    return np.random.default_rng(12345)


@pytest.fixture
def stream():
    return RngStream(2024, 0)


# acceptance verdicts, printed as one line each at the end of the session
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
