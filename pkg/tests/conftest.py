import numpy as np
import pytest

ACCEPTANCE_LINES = []


def random_spd(rng, d, shift=1.0):
    m = rng.standard_normal((d, d))
    return m @ m.T + shift * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20201017)


@pytest.fixture
def report():
    """Record a one-line acceptance verdict, then assert it."""

    def _report(name, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
        assert passed, f"{name}: {detail}"

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
