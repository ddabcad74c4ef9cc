import numpy as np
import pytest
from hypothesis import settings

from opident.data import assemble_reactor_dataset, assemble_servo_dataset, fit_normalization, normalize
from opident.reactor import generate_stepback_corpus
from opident.servo import generate_servo_corpus

settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def reactor_corpus():
    return generate_stepback_corpus()


@pytest.fixture(scope="session")
def servo_corpus():
    return generate_servo_corpus()


@pytest.fixture(scope="session")
def reactor_dataset(reactor_corpus):
    return assemble_reactor_dataset(reactor_corpus)


@pytest.fixture(scope="session")
def reactor_normalized(reactor_dataset):
    return normalize(reactor_dataset, fit_normalization(reactor_dataset))


@pytest.fixture(scope="session")
def servo_dataset(servo_corpus):
    return assemble_servo_dataset(servo_corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def criterion(capsys):
    """Record one acceptance line and fail the test when the criterion does not hold."""

    def report(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n[acceptance] {line}")
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
